#pragma once

// Numerical kernel for PSL(2,R) acting on the upper half-plane.
//
// Conventions:
//   a_t = diag(e^{t/2}, e^{-t/2})                    (geodesic flow, time t)
//   R_theta = [[cos(theta/2), -sin(theta/2)],
//              [sin(theta/2),  cos(theta/2)]]         (rotation of the fiber)
//   n(u) = [[1, u], [0, 1]]                           (upper unipotent)
// A unit tangent vector is identified with the group element g such that the
// vector is g applied to the upward unit vector at i. Right multiplication by
// a_t flows along the geodesic; right multiplication by R_theta rotates.

#include <array>
#include <numbers>

namespace covwalk::hyp2 {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kDetTolerance = 1e-10;
inline constexpr double kTraceTolerance = 1e-9;

/// Wraps an angle into [0, 2*pi); values that round to 2*pi map to 0.
double wrap_angle(double theta);

/// ad - bc with Kahan's fma correction, accurate even when ad and bc are
/// large and nearly equal.
double det2(double a, double b, double c, double d) noexcept;

/// Element of PSL(2,R) stored as its canonical representative: c > 0, or
/// c == 0 and a > 0 (the -I ambiguity is resolved once at construction).
class GroupElement {
public:
    constexpr GroupElement() = default;

    /// Validates det = 1 within kDetTolerance, then rescales so the
    /// determinant is exactly 1 (up to rounding) and canonicalizes the sign.
    static GroupElement from_entries(double a, double b, double c, double d);

    /// Rescales by 1/sqrt(det) without the tolerance check. Requires det > 0.
    static GroupElement normalized(double a, double b, double c, double d);

    /// Trusted entries (det 1 up to rounding); only the sign is canonicalized.
    /// Products of large-entry matrices must not be rescaled by their
    /// computed determinant, which carries an error of order entry^2 * eps.
    static GroupElement raw(double a, double b, double c, double d) { return canonical(a, b, c, d); }

    constexpr double a() const noexcept { return a_; }
    constexpr double b() const noexcept { return b_; }
    constexpr double c() const noexcept { return c_; }
    constexpr double d() const noexcept { return d_; }

    double det() const noexcept { return det2(a_, b_, c_, d_); }
    constexpr double trace() const noexcept { return a_ + d_; }
    double max_abs_entry() const noexcept;
    std::array<double, 4> entries() const noexcept { return {a_, b_, c_, d_}; }

private:
    constexpr GroupElement(double a, double b, double c, double d) : a_(a), b_(b), c_(c), d_(d) {}
    static GroupElement canonical(double a, double b, double c, double d);

    double a_ = 1.0, b_ = 0.0, c_ = 0.0, d_ = 1.0;
};

constexpr GroupElement identity() { return GroupElement{}; }

/// Matrix product, sign-canonicalized. The determinant is not rescaled; use
/// renormalize periodically on long running products.
GroupElement compose(const GroupElement& g, const GroupElement& h);
GroupElement renormalize(const GroupElement& g);
GroupElement inverse(const GroupElement& g);
inline GroupElement operator*(const GroupElement& g, const GroupElement& h) { return compose(g, h); }

GroupElement translation(double t);   // a_t
GroupElement rotation(double theta);  // R_theta
GroupElement unipotent(double u);     // n(u)

/// Integer power by repeated squaring (negative powers use the inverse).
GroupElement power(const GroupElement& g, long long k);

/// Max-norm distance between two PSL elements (minimum over the sign).
double psl_distance(const GroupElement& g, const GroupElement& h);

/// psl_distance scaled by max(1, largest entry); used for round-trip checks
/// on large-entry inputs where absolute agreement is below double resolution.
double psl_relative_distance(const GroupElement& g, const GroupElement& h);

/// Point of the upper half-plane. Construction rejects y <= 0.
class PointH {
public:
    PointH(double x, double y);
    static PointH i() { return {0.0, 1.0}; }

    double x() const noexcept { return x_; }
    double y() const noexcept { return y_; }

private:
    double x_, y_;
};

/// (az + b) / (cz + d). Throws DegenerateImage when the image leaves the
/// representable half-plane.
PointH mobius(const GroupElement& g, const PointH& z);

double distance(const PointH& z, const PointH& w);

/// Unit tangent vector rep * (i, up).
class UnitTangent {
public:
    UnitTangent() = default;
    explicit UnitTangent(const GroupElement& rep) : rep_(rep) {}

    /// Tangent at z pointing straight up.
    static UnitTangent upright_at(const PointH& z);

    const GroupElement& rep() const noexcept { return rep_; }
    PointH base_point() const;

private:
    GroupElement rep_;
};

UnitTangent geodesic_flow(const UnitTangent& x, double t);
UnitTangent rotate_fiber(const UnitTangent& x, double theta);

struct IwasawaCoords {
    double u = 0.0;
    double t = 0.0;
    double theta = 0.0;
};

/// g = n(u) a_t R_theta.
IwasawaCoords iwasawa(const GroupElement& g);
GroupElement reconstruct(const IwasawaCoords& coords);

struct CartanCoords {
    double theta1 = 0.0;
    double t = 0.0;
    double theta2 = 0.0;
};

/// g = R_theta1 a_t R_theta2 with t >= 0, via the closed-form 2x2 SVD.
CartanCoords cartan(const GroupElement& g);
GroupElement reconstruct(const CartanCoords& coords);

/// log of the largest singular value of an arbitrary real 2x2 matrix.
double log_top_singular_value(double a, double b, double c, double d);

enum class Kind { Identity, Elliptic, Parabolic, Hyperbolic };

const char* to_string(Kind kind);

struct Classification {
    Kind kind = Kind::Identity;
    double translation_length = 0.0;  // non-zero only for hyperbolic elements
};

Classification classify(const GroupElement& g);

/// Fixed points on the real boundary of a non-elliptic element. Returns the
/// count written (0 for identity/elliptic, 1 for parabolic, 2 for hyperbolic);
/// infinity is encoded as +inf.
int boundary_fixed_points(const GroupElement& g, double out[2]);

}  // namespace covwalk::hyp2
