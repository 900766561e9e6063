#include <cmath>
#include <numbers>

#include "covwalk/hyp2.hpp"
#include "covwalk/error.hpp"
#include "covwalk/random.hpp"
#include "doctest.h"

using namespace covwalk;
using namespace covwalk::hyp2;

namespace {

constexpr double kPi = std::numbers::pi;

// Plain 2x2 product with no normalization, the reference for compose.
struct M2 {
    double a, b, c, d;
};
M2 mul(M2 x, M2 y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}
double pdist(const GroupElement& g, M2 m) {
    const double p = std::max({std::abs(g.a() - m.a), std::abs(g.b() - m.b), std::abs(g.c() - m.c), std::abs(g.d() - m.d)});
    const double q = std::max({std::abs(g.a() + m.a), std::abs(g.b() + m.b), std::abs(g.c() + m.c), std::abs(g.d() + m.d)});
    return std::min(p, q);
}

GroupElement random_element(random::Stream& rng, double max_entry) {
    for (;;) {
        const double a = rng.uniform(-max_entry, max_entry);
        const double b = rng.uniform(-max_entry, max_entry);
        const double c = rng.uniform(-max_entry, max_entry);
        if (std::abs(a) < 1e-3) continue;
        const double d = (1.0 + b * c) / a;
        if (std::abs(d) > max_entry) continue;
        return GroupElement::normalized(a, b, c, d);
    }
}

}  // namespace

TEST_CASE("canonical sign and determinant check") {
    const auto g = GroupElement::from_entries(-1, -2, 0, -1);
    CHECK(g.a() == 1.0);
    CHECK(g.b() == 2.0);
    const auto h = GroupElement::from_entries(0, 1, -1, 0);
    CHECK(h.c() == 1.0);
    CHECK(h.b() == -1.0);
    CHECK_THROWS_AS(GroupElement::from_entries(1, 1, 1, 1), Error);
    CHECK_THROWS_AS(GroupElement::from_entries(2, 0, 0, 1), Error);
}

TEST_CASE("compose examples") {
    const double t = 0.7;
    const auto g = GroupElement::from_entries(0.3, 2.0, -0.4, (1 + 2.0 * -0.4) / 0.3);
    CHECK(psl_distance(compose(identity(), g), g) < 1e-15);
    CHECK(psl_distance(compose(translation(0.4), translation(t)), translation(0.4 + t)) < 1e-14);

    const double l = 1.3;
    const auto r = compose(rotation(-kPi / 2), compose(translation(l), rotation(kPi / 2)));
    // oracle: the unnormalized product by hand
    const double s = std::sqrt(0.5);
    const M2 rm{s, s, -s, s}, am{std::exp(l / 2), 0, 0, std::exp(-l / 2)}, rp{s, -s, s, s};
    const M2 ref = mul(rm, mul(am, rp));
    CHECK(pdist(r, ref) < 1e-14);
    CHECK(pdist(r, {std::cosh(l / 2), -std::sinh(l / 2), -std::sinh(l / 2), std::cosh(l / 2)}) < 1e-14);
}

TEST_CASE("inverse examples") {
    CHECK(psl_distance(inverse(identity()), identity()) == 0.0);
    CHECK(psl_distance(inverse(translation(1.5)), translation(-1.5)) < 1e-15);
    const auto n = inverse(GroupElement::from_entries(1, 2, 0, 1));
    CHECK(n.a() == 1.0);
    CHECK(n.b() == -2.0);
    CHECK(n.c() == 0.0);
    CHECK(n.d() == 1.0);
}

TEST_CASE("translation and rotation") {
    CHECK(psl_distance(translation(0.0), identity()) == 0.0);
    CHECK(psl_distance(rotation(2 * kPi), identity()) < 1e-15);
    const auto a = translation(2.0 * std::log(1.0 + std::sqrt(2.0)));
    CHECK(a.a() == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-15));
    CHECK(a.d() == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));
}

TEST_CASE("mobius and distance") {
    const PointH z(0.3, 2.5);
    const auto w = mobius(identity(), z);
    CHECK(w.x() == z.x());
    CHECK(w.y() == z.y());
    const auto e = mobius(translation(1.2), PointH::i());
    CHECK(e.x() == doctest::Approx(0.0));
    CHECK(e.y() == doctest::Approx(std::exp(1.2)).epsilon(1e-14));
    const auto s = mobius(GroupElement::from_entries(1, 2, 0, 1), PointH::i());
    CHECK(s.x() == 2.0);
    CHECK(s.y() == 1.0);
    CHECK_THROWS_AS(PointH(0.0, 0.0), Error);
    CHECK(distance(z, z) == 0.0);
    CHECK(distance(PointH::i(), PointH(0, std::exp(-3.0))) == doctest::Approx(3.0).epsilon(1e-13));

    random::Stream rng(11, 0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const auto g = random_element(rng, 5.0);
        const PointH p(rng.uniform(-3, 3), rng.uniform(0.1, 3));
        const PointH q(rng.uniform(-3, 3), rng.uniform(0.1, 3));
        worst = std::max(worst, std::abs(distance(mobius(g, p), mobius(g, q)) - distance(p, q)));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("group laws on random elements") {
    random::Stream rng(12, 0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const auto f = random_element(rng, 100.0);
        const auto g = random_element(rng, 100.0);
        const auto h = random_element(rng, 100.0);
        worst = std::max(worst, psl_relative_distance(compose(compose(f, g), h), compose(f, compose(g, h))));
        worst = std::max(worst, psl_distance(compose(f, inverse(f)), identity()));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("iwasawa decomposition") {
    auto k0 = iwasawa(identity());
    CHECK(k0.u == 0.0);
    CHECK(k0.t == 0.0);
    CHECK(k0.theta == 0.0);
    const auto k1 = iwasawa(compose(unipotent(0.8), translation(-1.1)));
    CHECK(k1.u == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(k1.t == doctest::Approx(-1.1).epsilon(1e-14));
    CHECK(k1.theta == 0.0);

    random::Stream rng(13, 0);
    double worst = 0.0;
    for (int k = 0; k < 20000; ++k) {
        const auto g = random_element(rng, k % 2 ? 10.0 : 1e6);
        worst = std::max(worst, psl_relative_distance(reconstruct(iwasawa(g)), g));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("cartan decomposition") {
    CHECK(cartan(identity()).t == 0.0);
    CHECK(cartan(translation(-2.5)).t == doctest::Approx(2.5).epsilon(1e-14));
    random::Stream rng(14, 0);
    double worst_t = 0.0, worst_rt = 0.0;
    for (int k = 0; k < 20000; ++k) {
        const double l = rng.uniform(0.01, 20.0);
        const auto g = compose(compose(rotation(rng.uniform(0, 7)), translation(l)), rotation(rng.uniform(0, 7)));
        worst_t = std::max(worst_t, std::abs(cartan(g).t - l) / std::max(1.0, l));
        const auto h = random_element(rng, k % 2 ? 10.0 : 1e6);
        const auto c = cartan(h);
        CHECK(c.t >= 0.0);
        worst_rt = std::max(worst_rt, psl_relative_distance(reconstruct(c), h));
    }
    CHECK(worst_t < 1e-12);
    CHECK(worst_rt <= 1e-12);

    // t is twice the log of the top singular value, and subadditive.
    for (int k = 0; k < 1000; ++k) {
        const auto g = random_element(rng, 50.0);
        const auto h = random_element(rng, 50.0);
        CHECK(cartan(g).t == doctest::Approx(2 * log_top_singular_value(g.a(), g.b(), g.c(), g.d())).epsilon(1e-12));
        CHECK(cartan(compose(g, h)).t <= cartan(g).t + cartan(h).t + 1e-9);
    }
}

TEST_CASE("classification") {
    const auto c = classify(translation(1.7));
    CHECK(c.kind == Kind::Hyperbolic);
    CHECK(c.translation_length == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(classify(GroupElement::from_entries(1, 2, 0, 1)).kind == Kind::Parabolic);
    CHECK(classify(rotation(1.0)).kind == Kind::Elliptic);
    CHECK(classify(identity()).kind == Kind::Identity);
    const double l1 = 2.0 * std::asinh(1.0);
    const auto g1 = compose(rotation(-kPi / 2), compose(translation(l1), rotation(kPi / 2)));
    CHECK(classify(g1).kind == Kind::Hyperbolic);
    CHECK(classify(g1).translation_length == doctest::Approx(l1).epsilon(1e-12));
}

TEST_CASE("geodesic flow and determinant drift") {
    const UnitTangent x(GroupElement::from_entries(2, 1, 3, 2));
    CHECK(psl_distance(geodesic_flow(x, 0.0).rep(), x.rep()) < 1e-15);
    CHECK(psl_relative_distance(geodesic_flow(geodesic_flow(x, 0.3), 0.9).rep(), geodesic_flow(x, 1.2).rep()) < 1e-13);
    const auto up = geodesic_flow(UnitTangent(), 2.0).base_point();
    CHECK(up.x() == doctest::Approx(0.0));
    CHECK(up.y() == doctest::Approx(std::exp(2.0)).epsilon(1e-14));

    random::Stream rng(15, 0);
    GroupElement acc;
    for (int k = 0; k < 1000000; ++k) {
        acc = compose(acc, rotation(rng.uniform(0, 6.3)));
        if (k % 64 == 63) acc = renormalize(acc);
    }
    CHECK(std::abs(acc.det() - 1.0) < 1e-8);
}

TEST_CASE("angle wrapping") {
    CHECK(wrap_angle(-0.1) == doctest::Approx(kTwoPi - 0.1));
    CHECK(wrap_angle(kTwoPi) == 0.0);
    CHECK(wrap_angle(std::nextafter(kTwoPi, 0.0)) < kTwoPi);
}
