#pragma once

// Z^d-cover bookkeeping on top of a base surface: the weight homomorphism
// phi, cusp translation vectors, their real span, the sheet index carried by
// each point and the drift cocycle read off its changes.

#include <cstdint>
#include <optional>
#include <vector>

#include "covwalk/fuchsian.hpp"

namespace covwalk::cover {

using fuchsian::SurfaceGeometry;
using fuchsian::Word;
using hyp2::GroupElement;
using hyp2::UnitTangent;
using IntVec = std::vector<long long>;

/// Invariant factors of an integer matrix (rows x cols), non-zero ones only.
std::vector<long long> smith_invariants(std::vector<IntVec> m);

/// Integer row echelon basis of the lattice spanned by `rows`.
std::vector<IntVec> integer_row_basis(std::vector<IntVec> rows);

struct CoverSpec {
    int d = 1;
    std::vector<IntVec> weights;           // per generator
    std::vector<IntVec> v;                 // per cusp
    std::vector<IntVec> ec_basis;          // integer basis of span{v}
    std::vector<std::vector<double>> ec_orthonormal;
    std::vector<std::vector<double>> complement_orthonormal;
    std::vector<bool> unfolded;            // v != 0

    int ec_dim() const noexcept { return static_cast<int>(ec_basis.size()); }
    bool any_unfolded() const noexcept;
};

/// Checks relators against phi and the Smith form of the weight matrix, then
/// fills v, the E_C bases and the unfolded flags. RelatorNotKilled carries
/// the relator's input line when the presentation recorded one.
CoverSpec validate_cover(const fuchsian::LatticePresentation& pres, const std::vector<fuchsian::CuspData>& cusps,
                         int d, std::vector<IntVec> weights);

IntVec phi(const CoverSpec& spec, const Word& w);

struct CoverPoint {
    UnitTangent rep;  // base point in the fundamental polygon
    IntVec index;
};

/// Base geometry plus cover data, with phi precomputed for every move the
/// reduction can make.
class CoverModel {
public:
    CoverModel(SurfaceGeometry geom, CoverSpec spec);

    const SurfaceGeometry& geometry() const noexcept { return geom_; }
    const CoverSpec& spec() const noexcept { return spec_; }
    int d() const noexcept { return spec_.d; }

    /// Reduces a raw tangent vector of the plane; the index is the sheet of
    /// the raw point, i.e. -phi(deck).
    CoverPoint lift(const UnitTangent& x) const;

    /// rep <- reduce(rep * g), index <- index - phi(deck).
    void step(CoverPoint& p, const GroupElement& g) const;
    CoverPoint apply_step(const CoverPoint& p, const GroupElement& g) const;

    /// Cumulative index change after each letter (size = letters.size()).
    std::vector<IntVec> sigma_path(const CoverPoint& start, const std::vector<GroupElement>& letters) const;
    IntVec sigma(const CoverPoint& start, const std::vector<GroupElement>& letters) const;

private:
    SurfaceGeometry geom_;
    CoverSpec spec_;
    std::vector<IntVec> side_phi_;   // phi(pairing of side s)
    std::vector<IntVec> frame_phi_;  // phi(parabolic of frame f)
};

/// Finite orbit of a start point under a discrete step set, as a Markov
/// chain: next[s][a] is the state reached from state s by atom a, and
/// delta[s][a] the index change of that step. Each transition is computed
/// from the state's own representative, so no rounding error is carried
/// from one step to the next.
struct FiniteOrbit {
    std::vector<CoverPoint> states;  // states[0] is the start
    std::vector<std::vector<int>> next;
    std::vector<std::vector<IntVec>> delta;
};

/// Breadth-first enumeration of start * (semigroup of atoms) on the base,
/// identifying representatives within `tol`. Empty when the orbit exceeds
/// max_states.
std::optional<FiniteOrbit> enumerate_orbit(const CoverModel& model, const CoverPoint& start,
                                           const std::vector<GroupElement>& atoms, std::size_t max_states = 4096,
                                           double tol = 1e-9);

struct ExcursionRecord {
    int cusp = -1;
    long long entry_step = 0;
    long long exit_step = 0;
    IntVec index_delta;
    double max_height = 0.0;
};

/// One trajectory sample: the step number, cusp membership (highest frame)
/// and the index at that step.
struct TrajectorySample {
    long long step = 0;
    int cusp = -1;
    double log_height = 0.0;
    IntVec index;
};

/// Maximal runs of samples above log-height h in one cusp. The excursion
/// owns the transitions from the sample before the run up to its last
/// sample; everything else is the complement.
std::vector<ExcursionRecord> cusp_excursions(const std::vector<TrajectorySample>& samples, double h);

/// Largest |sigma(x, g)| / e^t over x sampled at log-height t in the given
/// cusp (u and the fiber angle uniform) and g in `support`.
double sigma_cusp_ratio(const CoverModel& model, int cusp, double t, const std::vector<GroupElement>& support,
                        int samples, random::Stream& rng);

double norm(const IntVec& v);

}  // namespace covwalk::cover
