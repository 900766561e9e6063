#pragma once

// Random walk and geodesic flow trajectories on a Z^d-cover: step measures,
// per-trajectory random streams, checkpoint records and Lyapunov estimates.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "covwalk/cover.hpp"

namespace covwalk::walk {

using cover::CoverModel;
using cover::CoverPoint;
using cover::IntVec;
using hyp2::GroupElement;
using hyp2::UnitTangent;

struct Atom {
    GroupElement element;
    double probability = 0.0;
    std::string label;
};

/// Either finitely many atoms, or R_theta a_tau R_theta' with both angles
/// uniform on [0, 2 pi) and tau uniform on [tau_min, tau_max].
class MeasureSpec {
public:
    static MeasureSpec atoms(std::vector<Atom> atoms);
    static MeasureSpec parametric(double tau_min, double tau_max);

    bool is_atomic() const noexcept { return !atoms_.empty(); }
    const std::vector<Atom>& atom_list() const noexcept { return atoms_; }
    double tau_min() const noexcept { return tau_min_; }
    double tau_max() const noexcept { return tau_max_; }

    /// Atom index drawn from the stream (atomic measures only).
    std::size_t sample_atom(random::Stream& rng) const;
    GroupElement sample(random::Stream& rng) const;

private:
    std::vector<Atom> atoms_;
    std::vector<double> cumulative_;
    double tau_min_ = 0.0, tau_max_ = 0.0;
};

struct ZariskiResult {
    bool pass = false;
    std::string reason;
};

/// Looks for two hyperbolic elements without a common boundary fixed point
/// among support words of length <= 6 (sampled words for parametric
/// measures).
ZariskiResult zariski_density_check(const MeasureSpec& m, std::uint64_t seed = 0);

enum class StartMode { Fixed, Haar };

struct WalkConfig {
    long long steps = 1000;
    int trajectories = 1;
    std::uint64_t seed = 0;
    std::vector<long long> checkpoints;  // sorted step counts; empty means only the last step
    StartMode start = StartMode::Fixed;
    GroupElement start_rep;              // raw tangent for fixed starts
    double haar_log_height = 1.0;        // cusp cutoff for the Haar sampler
    double return_radius = 2.0;          // start-neighborhood radius for returns
    bool use_orbit_chain = true;         // finite orbits run on the exact chain
    int threads = 0;                     // 0: COVWALK_THREADS or hardware
};

/// n = k * stride for k >= 1, plus `per_decade` geometric points from 1,
/// plus `steps` itself; sorted and unique.
std::vector<long long> make_checkpoints(long long steps, long long stride, int per_decade = 0);

struct CheckpointRecord {
    int trajectory = 0;
    long long n = 0;
    double time = 0.0;         // n for walks, flow time for geodesics
    IntVec sigma;              // index change since the start
    std::vector<double> drift; // sigma / time
    int cusp = -1;
    double cusp_log_height = 0.0;
    double cartan_t = 0.0;
    double max_excursion = 0.0;  // max |sigma| over steps <= n
};

struct TrajectorySummary {
    int trajectory = 0;
    bool ok = true;
    std::string error;
    long long steps_done = 0;
    long long first_return = -1;  // first re-entry (sigma = 0, near the start) after leaving
    long long return_count = 0;
};

struct WalkResult {
    std::vector<CheckpointRecord> records;  // by trajectory, then n
    std::vector<TrajectorySummary> summaries;
    bool orbit_chain = false;
    std::size_t orbit_size = 0;
};

WalkResult run_walk(const CoverModel& model, const MeasureSpec& m, const WalkConfig& cfg);

struct GeodesicConfig {
    double T = 10.0;
    double dt = 0.25;
    int trajectories = 1;
    std::uint64_t seed = 0;
    std::vector<double> checkpoints;  // flow times; empty means only T
    StartMode start = StartMode::Haar;
    GroupElement start_rep;
    double haar_log_height = 1.0;
    int threads = 0;
};

/// Flow in increments a_dt (a shorter last increment lands exactly on each
/// checkpoint time). With T a multiple of dt and checkpoints on the dt grid
/// this is the walk with measure delta(a_dt).
WalkResult run_geodesic(const CoverModel& model, const GeodesicConfig& cfg);

struct LyapunovEstimate {
    double lambda = 0.0;
    double standard_error = 0.0;
    std::vector<double> per_trajectory;  // t_n / n
    bool positive = false;
};

/// Mean of t_n / n over trajectories. Throws InvalidArgument when the
/// Zariski check fails, unless `override_check`.
LyapunovEstimate lyapunov_estimate(const MeasureSpec& m, long long steps, int trajectories, std::uint64_t seed,
                                   bool override_check = false, int threads = 0);

/// Running product of det-1 matrices kept as e^scale * M, so t_n never
/// overflows. `t()` is the Cartan t-component of the product.
class RunningProduct {
public:
    void multiply(const GroupElement& g);
    double t() const;
    long long length() const noexcept { return length_; }

private:
    double a_ = 1.0, b_ = 0.0, c_ = 0.0, d_ = 1.0;
    double log_scale_ = 0.0;
    long long length_ = 0;
};

}  // namespace covwalk::walk
