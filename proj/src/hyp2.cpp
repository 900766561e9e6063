#include "covwalk/hyp2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "covwalk/error.hpp"

namespace covwalk::hyp2 {

double wrap_angle(double theta) {
    double r = std::fmod(theta, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

double det2(double a, double b, double c, double d) noexcept {
    const double w = b * c;
    const double err = std::fma(-b, c, w);
    return std::fma(a, d, -w) + err;
}

GroupElement GroupElement::canonical(double a, double b, double c, double d) {
    const bool flip = c < 0.0 || (c == 0.0 && (a < 0.0 || (a == 0.0 && b < 0.0)));
    if (flip) return {-a, -b, -c, -d};
    return {a, b, c, d};
}

GroupElement GroupElement::normalized(double a, double b, double c, double d) {
    const double det = det2(a, b, c, d);
    if (!(det > 0.0) || !std::isfinite(det)) {
        throw Error(ErrorCode::InvalidArgument, "matrix has non-positive determinant");
    }
    const double s = 1.0 / std::sqrt(det);
    return canonical(a * s, b * s, c * s, d * s);
}

GroupElement GroupElement::from_entries(double a, double b, double c, double d) {
    const double det = det2(a, b, c, d);
    if (!(std::abs(det - 1.0) <= kDetTolerance)) {
        throw Error(ErrorCode::InvalidArgument,
                    "determinant " + std::to_string(det) + " differs from 1 by more than 1e-10");
    }
    return normalized(a, b, c, d);
}

double GroupElement::max_abs_entry() const noexcept {
    return std::max({std::abs(a_), std::abs(b_), std::abs(c_), std::abs(d_)});
}

GroupElement compose(const GroupElement& g, const GroupElement& h) {
    return GroupElement::raw(g.a() * h.a() + g.b() * h.c(), g.a() * h.b() + g.b() * h.d(),
                                    g.c() * h.a() + g.d() * h.c(), g.c() * h.b() + g.d() * h.d());
}

GroupElement renormalize(const GroupElement& g) { return GroupElement::normalized(g.a(), g.b(), g.c(), g.d()); }

GroupElement inverse(const GroupElement& g) { return GroupElement::raw(g.d(), -g.b(), -g.c(), g.a()); }

GroupElement translation(double t) {
    const double e = std::exp(t / 2.0);
    return GroupElement::raw(e, 0.0, 0.0, 1.0 / e);
}

GroupElement rotation(double theta) {
    const double h = theta / 2.0;
    return GroupElement::raw(std::cos(h), -std::sin(h), std::sin(h), std::cos(h));
}

GroupElement unipotent(double u) { return GroupElement::raw(1.0, u, 0.0, 1.0); }

GroupElement power(const GroupElement& g, long long k) {
    GroupElement base = k < 0 ? inverse(g) : g;
    unsigned long long e = k < 0 ? static_cast<unsigned long long>(-(k + 1)) + 1ULL
                                 : static_cast<unsigned long long>(k);
    GroupElement acc;
    while (e != 0) {
        if (e & 1ULL) acc = compose(acc, base);
        e >>= 1U;
        if (e != 0) base = compose(base, base);
    }
    return acc;
}

double psl_distance(const GroupElement& g, const GroupElement& h) {
    const auto x = g.entries();
    const auto y = h.entries();
    double plus = 0.0, minus = 0.0;
    for (int k = 0; k < 4; ++k) {
        plus = std::max(plus, std::abs(x[k] - y[k]));
        minus = std::max(minus, std::abs(x[k] + y[k]));
    }
    return std::min(plus, minus);
}

double psl_relative_distance(const GroupElement& g, const GroupElement& h) {
    const double scale = std::max({1.0, g.max_abs_entry(), h.max_abs_entry()});
    return psl_distance(g, h) / scale;
}

PointH::PointH(double x, double y) : x_(x), y_(y) {
    if (!(y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
        throw Error(ErrorCode::InvalidArgument, "point is not in the upper half-plane");
    }
}

PointH mobius(const GroupElement& g, const PointH& z) {
    // (az+b)/(cz+d) = ((az+b)(c conj(z) + d)) / |cz+d|^2
    const double cx = g.c() * z.x() + g.d();
    const double cy = g.c() * z.y();
    const double den = cx * cx + cy * cy;
    const double nx = g.a() * z.x() + g.b();
    const double ny = g.a() * z.y();
    const double x = (nx * cx + ny * cy) / den;
    const double y = g.det() * z.y() / den;
    if (!std::isfinite(x) || !std::isfinite(y) || y <= 1e-300) {
        throw Error(ErrorCode::DegenerateImage, "Mobius image left the representable half-plane");
    }
    return {x, y};
}

double distance(const PointH& z, const PointH& w) {
    const double dx = z.x() - w.x();
    const double dy = z.y() - w.y();
    return 2.0 * std::asinh(std::hypot(dx, dy) / (2.0 * std::sqrt(z.y() * w.y())));
}

UnitTangent UnitTangent::upright_at(const PointH& z) {
    const double s = std::sqrt(z.y());
    return UnitTangent(GroupElement::raw(s, z.x() / s, 0.0, 1.0 / s));
}

PointH UnitTangent::base_point() const {
    const double r2 = rep_.c() * rep_.c() + rep_.d() * rep_.d();
    return {(rep_.a() * rep_.c() + rep_.b() * rep_.d()) / r2, 1.0 / r2};
}

UnitTangent geodesic_flow(const UnitTangent& x, double t) {
    return UnitTangent(compose(x.rep(), translation(t)));
}

UnitTangent rotate_fiber(const UnitTangent& x, double theta) {
    return UnitTangent(compose(x.rep(), rotation(theta)));
}

IwasawaCoords iwasawa(const GroupElement& g) {
    // Bottom row of n(u) a_t R_theta is e^{-t/2} (sin(theta/2), cos(theta/2)).
    const double r2 = g.c() * g.c() + g.d() * g.d();
    IwasawaCoords out;
    out.t = -std::log(r2);
    out.u = (g.a() * g.c() + g.b() * g.d()) / r2;
    out.theta = wrap_angle(2.0 * std::atan2(g.c(), g.d()));
    return out;
}

GroupElement reconstruct(const IwasawaCoords& k) {
    const double e = std::exp(k.t / 2.0);
    const double ie = 1.0 / e;
    const double cs = std::cos(k.theta / 2.0);
    const double sn = std::sin(k.theta / 2.0);
    // n(u) a_t R_theta written out
    return GroupElement::raw(e * cs + k.u * ie * sn, -e * sn + k.u * ie * cs, ie * sn, ie * cs);
}

namespace {

struct Svd2 {
    double phi;    // left rotation angle (standard rotation matrix)
    double theta;  // right rotation angle
    double smax;
    double R;
};

// M = Rot(phi) diag(Q+R, Q-R) Rot(theta).
Svd2 svd2(double a, double b, double c, double d) {
    const double E = (a + d) / 2.0;
    const double F = (a - d) / 2.0;
    const double G = (c + b) / 2.0;
    const double H = (c - b) / 2.0;
    const double Q = std::hypot(E, H);
    const double R = std::hypot(F, G);
    const double a1 = std::atan2(G, F);
    const double a2 = std::atan2(H, E);
    return {(a2 + a1) / 2.0, (a2 - a1) / 2.0, Q + R, R};
}

}  // namespace

CartanCoords cartan(const GroupElement& g) {
    const Svd2 s = svd2(g.a(), g.b(), g.c(), g.d());
    CartanCoords out;
    // det = 1 gives Q^2 - R^2 = 1, so 2 ln(Q + R) = 2 asinh(R) without cancellation.
    out.t = 2.0 * std::asinh(s.R);
    out.theta1 = wrap_angle(2.0 * s.phi);
    out.theta2 = wrap_angle(2.0 * s.theta);
    return out;
}

GroupElement reconstruct(const CartanCoords& k) {
    return compose(compose(rotation(k.theta1), translation(k.t)), rotation(k.theta2));
}

double log_top_singular_value(double a, double b, double c, double d) {
    return std::log(svd2(a, b, c, d).smax);
}

const char* to_string(Kind kind) {
    switch (kind) {
        case Kind::Identity: return "identity";
        case Kind::Elliptic: return "elliptic";
        case Kind::Parabolic: return "parabolic";
        case Kind::Hyperbolic: return "hyperbolic";
    }
    return "unknown";
}

Classification classify(const GroupElement& g) {
    const double tr = std::abs(g.trace());
    if (std::abs(tr - 2.0) <= kTraceTolerance) {
        if (psl_distance(g, identity()) <= kTraceTolerance) return {Kind::Identity, 0.0};
        return {Kind::Parabolic, 0.0};
    }
    if (tr < 2.0) return {Kind::Elliptic, 0.0};
    return {Kind::Hyperbolic, 2.0 * std::acosh(tr / 2.0)};
}

int boundary_fixed_points(const GroupElement& g, double out[2]) {
    const Classification cls = classify(g);
    if (cls.kind == Kind::Identity || cls.kind == Kind::Elliptic) return 0;
    const double inf = std::numeric_limits<double>::infinity();
    const double a = g.a(), b = g.b(), c = g.c(), d = g.d();
    if (cls.kind == Kind::Parabolic) {
        out[0] = std::abs(c) <= kTraceTolerance * std::max(1.0, g.max_abs_entry()) ? inf : (a - d) / (2.0 * c);
        return 1;
    }
    const double disc = std::sqrt(std::max(0.0, (a + d) * (a + d) - 4.0));
    if (c == 0.0) {
        out[0] = inf;
        out[1] = b / (d - a);
        return 2;
    }
    out[0] = ((a - d) - disc) / (2.0 * c);
    out[1] = ((a - d) + disc) / (2.0 * c);
    return 2;
}

}  // namespace covwalk::hyp2
