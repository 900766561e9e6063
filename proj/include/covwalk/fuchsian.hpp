#pragma once

// Lattices in PSL(2,R): presentations, Dirichlet fundamental polygons with
// side pairings, cusp frames, reduction of tangent vectors into the polygon,
// and Haar sampling on the unit tangent bundle of the quotient surface.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "covwalk/error.hpp"
#include "covwalk/hyp2.hpp"
#include "covwalk/random.hpp"

namespace covwalk::fuchsian {

using hyp2::GroupElement;
using hyp2::PointH;
using hyp2::UnitTangent;

inline constexpr double kGeomEps = 1e-9;
inline constexpr double kRelatorTolerance = 1e-9;
inline constexpr int kDefaultWordBound = 12;
inline constexpr int kMaxReduceIterations = 1'000'000;

// ---------------------------------------------------------------------------
// Words

/// generator^exponent; exponent is never zero inside a Word.
struct Letter {
    int generator = 0;
    long long exponent = 1;
    friend bool operator==(const Letter&, const Letter&) = default;
};

/// Word in the generators, kept freely reduced with adjacent powers merged.
class Word {
public:
    Word() = default;
    Word(std::initializer_list<Letter> letters);

    void push_back(Letter letter);
    void append(const Word& other, long long power = 1);

    Word inverse() const;
    Word power(long long k) const;

    bool empty() const noexcept { return letters_.empty(); }
    const std::vector<Letter>& letters() const noexcept { return letters_; }
    /// Total number of generator symbols, counting multiplicity.
    long long length() const noexcept;

    friend bool operator==(const Word&, const Word&) = default;

private:
    std::vector<Letter> letters_;
};

// ---------------------------------------------------------------------------
// Presentations

struct Generator {
    std::string label;
    GroupElement element;
};

class LatticePresentation {
public:
    LatticePresentation() = default;

    /// Validates that relators evaluate to the identity within 1e-9 and that
    /// no generator is elliptic or trivial. `relator_lines` (optional, same
    /// length as relators) anchors errors to input lines.
    LatticePresentation(std::vector<Generator> generators, std::vector<Word> relators,
                        std::vector<int> relator_lines = {});

    const std::vector<Generator>& generators() const noexcept { return generators_; }
    const std::vector<Word>& relators() const noexcept { return relators_; }
    int relator_line(std::size_t k) const { return k < relator_lines_.size() ? relator_lines_[k] : 0; }
    std::size_t rank() const noexcept { return generators_.size(); }

    /// Euler characteristic of the presentation complex, 1 - #gens + #relators
    /// (equal to chi of the surface for free and one-relator surface groups).
    int euler_characteristic() const noexcept {
        return 1 - static_cast<int>(generators_.size()) + static_cast<int>(relators_.size());
    }

    GroupElement evaluate(const Word& w) const;
    const GroupElement& element(int generator) const { return generators_.at(generator).element; }
    const GroupElement& element_inverse(int generator) const { return inverses_.at(generator); }

    /// -1 when the label is unknown.
    int index_of(std::string_view label) const;

    /// Parses "A B^-1 A^3" or "A*B^-1"; whitespace and '*' both separate.
    Word parse_word(std::string_view text) const;
    std::string format(const Word& w) const;

private:
    std::vector<Generator> generators_;
    std::vector<GroupElement> inverses_;
    std::vector<Word> relators_;
    std::vector<int> relator_lines_;
};

// ---------------------------------------------------------------------------
// Polygon geometry

/// Point of the real boundary line or infinity.
struct BoundaryPoint {
    double x = 0.0;
    bool infinite = false;

    static BoundaryPoint at_infinity() { return {0.0, true}; }
    bool near(const BoundaryPoint& other, double tol = 1e-7) const;
};

BoundaryPoint mobius(const GroupElement& g, const BoundaryPoint& p);

/// Geodesic alpha |z|^2 + beta x + gamma = 0, normalized so that
/// (alpha |z|^2 + beta x + gamma) / y = sinh(signed hyperbolic distance).
/// The closed half-plane {value <= 0} is the "inside".
struct Geodesic {
    double alpha = 0.0, beta = 1.0, gamma = 0.0;

    static Geodesic vertical(double x0, bool inside_is_right);
    static Geodesic circle(double center, double radius, bool inside_is_outside);
    /// Perpendicular bisector of c and w, with c on the inside.
    static Geodesic bisector(const PointH& c, const PointH& w);

    double value(double x, double y) const noexcept { return alpha * (x * x + y * y) + beta * x + gamma; }
    double signed_distance(const PointH& z) const { return std::asinh(value(z.x(), z.y()) / z.y()); }
    std::pair<BoundaryPoint, BoundaryPoint> endpoints() const;
    bool is_vertical() const noexcept { return alpha == 0.0; }
};

struct Side {
    Geodesic geodesic;
    Word pairing;                  // gamma: this side bisects (center, gamma * center)
    GroupElement pairing_element;  // gamma
    GroupElement pairing_inverse;  // gamma^-1, the move applied when the side is violated
    int partner = -1;              // side bisecting (center, gamma^-1 * center)
};

struct PolygonVertex {
    bool ideal = false;
    BoundaryPoint boundary;           // when ideal
    double x = 0.0, y = 0.0;          // when finite
    double angle = 0.0;               // interior angle; 0 for ideal vertices
};

/// Vertex k is the start of side k and the end of side k-1 (counter-clockwise).
struct FundamentalPolygon {
    PointH center = PointH::i();
    std::vector<Side> sides;
    std::vector<PolygonVertex> vertices;
    double area = 0.0;

    bool contains(const PointH& z, double eps = kGeomEps) const;
    /// Largest signed distance over the sides (<= 0 inside).
    double max_violation(const PointH& z) const;
    std::size_t ideal_vertex_count() const;
};

struct CuspData {
    BoundaryPoint fixed_point;
    GroupElement normalizer;  // maps infinity to fixed_point
    Word primitive_parabolic;
    double width = 0.0;       // normalizer^-1 * parabolic * normalizer = n(width), width > 0
};

/// Per-ideal-vertex frame: `to_frame` maps the vertex to infinity with the
/// cusp's normalization, so Im(to_frame * z) is the cusp height coordinate.
struct CuspFrame {
    int vertex = -1;
    int cusp = -1;
    GroupElement to_frame;
    GroupElement from_frame;
    Word parabolic;           // conjugate of the cusp word fixing this vertex
    Word conjugator;          // element of the lattice carrying the cusp fixed point here
    double width = 0.0;
    double u_left = 0.0, u_right = 0.0;
};

/// Everything needed to reduce and sample on one base surface.
struct SurfaceGeometry {
    std::string name;
    LatticePresentation presentation;
    FundamentalPolygon polygon;
    std::vector<CuspData> cusps;
    std::vector<CuspFrame> frames;
    double disjoint_height = 1.0;      // smallest integer log-height with disjoint horoballs
    double accel_log_height = 2.0;     // reduction jumps along cusps above this log-height
};

// ---------------------------------------------------------------------------
// Construction

struct TorusParams {
    double l1 = 2.0 * std::asinh(1.0);
    double l2 = 2.0 * std::asinh(1.0);
};

/// Presets: "gamma2" (thrice-punctured sphere, level-2 congruence group) and
/// "punctured_square_torus" (free group on g1 = R_{-pi/2} a_l1 R_{pi/2},
/// g2 = a_l2 with sinh(l1/2) sinh(l2/2) = 1).
SurfaceGeometry builtin_lattice(std::string_view name, const TorusParams& params = {});

std::vector<std::string> builtin_names();

/// Dirichlet polygon about `center` using every non-trivial group element of
/// word length <= word_length_bound. Throws AreaMismatch when the result does
/// not match 2 pi |chi| within 1e-6.
FundamentalPolygon dirichlet_domain(const LatticePresentation& pres, const PointH& center,
                                    int word_length_bound = kDefaultWordBound);

/// Words whose bisectors bound the Dirichlet region about `center` (no area
/// certificate, so infinite-area groups are allowed).
std::vector<Word> dirichlet_side_words(const LatticePresentation& pres, const PointH& center,
                                       int word_length_bound);

/// Polygon cut out by the bisectors of center and w * center for the given
/// words only (no completeness certificate).
FundamentalPolygon polygon_from_words(const LatticePresentation& pres, const PointH& center,
                                      const std::vector<Word>& words);

/// Builds vertex cycles, cusp frames and acceleration heights. When `cusps`
/// is empty, one cusp per ideal-vertex cycle is derived with width 1.
SurfaceGeometry make_geometry(std::string name, LatticePresentation pres, FundamentalPolygon polygon,
                              std::vector<CuspData> cusps = {});

// ---------------------------------------------------------------------------
// Reduction

struct ReduceOptions {
    int max_iterations = kMaxReduceIterations;
    bool accelerate = true;
    double eps = kGeomEps;
};

/// Moves applied while reducing: side(s) means rep <- pairing_inverse(s) * rep;
/// cusp(f, k) means rep <- parabolic(f)^k * rep.
struct NullReduceVisitor {
    void side(int) noexcept {}
    void cusp(int, long long) noexcept {}
};

namespace detail {
GroupElement frame_parabolic_power(const CuspFrame& frame, long long k);
[[noreturn]] void throw_non_termination(int iterations);
}  // namespace detail

/// Greedy Dirichlet descent. Sides are examined in stored order and the first
/// one violated by more than eps acts. Deep inside a cusp the descent jumps by
/// a power of the vertex parabolic instead of winding one side at a time.
template <class Visitor>
GroupElement reduce_with(GroupElement rep, const SurfaceGeometry& geom, Visitor&& visit,
                         const ReduceOptions& opt = {}) {
    const auto& sides = geom.polygon.sides;
    const double accel_height = std::exp(geom.accel_log_height);
    for (int iter = 0;; ++iter) {
        if (iter >= opt.max_iterations) detail::throw_non_termination(iter);
        const double r2 = rep.c() * rep.c() + rep.d() * rep.d();
        const double x = (rep.a() * rep.c() + rep.b() * rep.d()) / r2;
        const double y = 1.0 / r2;

        if (opt.accelerate) {
            bool jumped = false;
            for (std::size_t f = 0; f < geom.frames.size(); ++f) {
                const CuspFrame& fr = geom.frames[f];
                const GroupElement& h = fr.to_frame;
                const double cx = h.c() * x + h.d();
                const double cy = h.c() * y;
                const double den = cx * cx + cy * cy;
                const double fy = y / den;
                if (!(fy > accel_height)) continue;
                const double fx = ((h.a() * x + h.b()) * cx + h.a() * y * cy) / den;
                const double mid = 0.5 * (fr.u_left + fr.u_right);
                const double k = std::nearbyint((fx - mid) / fr.width);
                if (std::abs(k) < 2.0) continue;
                const auto kk = static_cast<long long>(k);
                rep = hyp2::compose(detail::frame_parabolic_power(fr, -kk), rep);
                visit.cusp(static_cast<int>(f), -kk);
                jumped = true;
                break;
            }
            if (jumped) continue;
        }

        int violated = -1;
        for (std::size_t s = 0; s < sides.size(); ++s) {
            if (sides[s].geodesic.value(x, y) / y > opt.eps) {
                violated = static_cast<int>(s);
                break;
            }
        }
        if (violated < 0) return rep;
        rep = hyp2::compose(sides[violated].pairing_inverse, rep);
        visit.side(violated);
    }
}

struct ReducedPoint {
    UnitTangent rep;
    Word deck_word;  // deck_word evaluated, times the raw input, gives rep
};

ReducedPoint reduce(const UnitTangent& x, const SurfaceGeometry& geom, const ReduceOptions& opt = {});

/// Log-height of z in the highest cusp frame and that frame's cusp index.
struct CuspPosition {
    int cusp = -1;
    int frame = -1;
    double log_height = -std::numeric_limits<double>::infinity();
};

CuspPosition cusp_position(const SurfaceGeometry& geom, const PointH& z);

// ---------------------------------------------------------------------------
// Cusp neighborhoods and Haar sampling

struct CuspSector {
    int cusp = -1;
    double width = 0.0;
    double area = 0.0;  // width * e^-h
};

struct CoreBox {
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
    double hyperbolic_area() const { return (x_max - x_min) * (1.0 / y_min - 1.0 / y_max); }
};

struct CuspNeighborhoods {
    double log_height = 1.0;
    std::vector<CuspSector> sectors;
    CoreBox core_box;
    double core_area = 0.0;
    double total_area = 0.0;

    bool in_core(const SurfaceGeometry& geom, const PointH& z) const;
};

/// Horoball sectors above log-height h and the compact core. Throws
/// OverlappingHoroballs when h is too small for the sectors to be disjoint.
CuspNeighborhoods cusp_neighborhoods(const SurfaceGeometry& geom, double h);

/// Reports the first overlap found at log-height h, if any.
std::optional<std::string> horoball_overlap(const SurfaceGeometry& geom, double h);

/// Haar-distributed unit tangent vector in the polygon: rejection sampling on
/// the core box with density dx dy / y^2, exact (u uniform, height e^{h+Exp(1)})
/// sampling in each cusp sector, uniform fiber angle.
UnitTangent haar_sample(const SurfaceGeometry& geom, const CuspNeighborhoods& nbhd, random::Stream& rng);

}  // namespace covwalk::fuchsian
