#include <algorithm>
#include <cmath>
#include <numbers>

#include "covwalk/fuchsian.hpp"
#include "doctest.h"

using namespace covwalk;
using namespace covwalk::fuchsian;

namespace {

constexpr double kPi = std::numbers::pi;

bool has_vertex(const FundamentalPolygon& p, BoundaryPoint b) {
    return std::any_of(p.vertices.begin(), p.vertices.end(),
                       [&](const PolygonVertex& v) { return v.ideal && v.boundary.near(b, 1e-9); });
}

// Same geodesic up to the orientation-preserving normalization.
bool same_geodesic(const Geodesic& a, const Geodesic& b, double tol) {
    return std::abs(a.alpha - b.alpha) <= tol && std::abs(a.beta - b.beta) <= tol && std::abs(a.gamma - b.gamma) <= tol;
}

UnitTangent random_tangent(random::Stream& rng, const PointH& c, double radius) {
    // point at hyperbolic distance <= radius from c, random direction
    const double r = rng.uniform(0, radius);
    const double phi = rng.uniform(0, hyp2::kTwoPi);
    const auto to_c = UnitTangent::upright_at(c).rep();
    const auto g = hyp2::compose(to_c, hyp2::compose(hyp2::rotation(phi), hyp2::translation(r)));
    return UnitTangent(hyp2::compose(g, hyp2::rotation(rng.uniform(0, hyp2::kTwoPi))));
}

}  // namespace

TEST_CASE("words and parsing") {
    const auto g = builtin_lattice("gamma2");
    const auto& pres = g.presentation;
    const Word w = pres.parse_word("A B^-1 A^3");
    CHECK(w.letters().size() == 3);
    CHECK(w.length() == 5);
    CHECK(pres.format(w) == "A B^-1 A^3");
    CHECK(pres.parse_word("A*B^-1*A^3") == w);
    Word v = w;
    v.append(w.inverse());
    CHECK(v.empty());
    CHECK(pres.format(Word{}) == "1");
    CHECK_THROWS_AS(pres.parse_word("C"), Error);
    CHECK(Word{{0, 2}}.power(-3) == Word{{0, -6}});
    CHECK(hyp2::psl_distance(pres.evaluate(w), hyp2::compose(hyp2::compose(pres.element(0), hyp2::inverse(pres.element(1))),
                                                             hyp2::power(pres.element(0), 3))) < 1e-12);
}

TEST_CASE("presentation validation") {
    const auto A = GroupElement::from_entries(1, 2, 0, 1);
    CHECK_THROWS_AS(LatticePresentation({{"R", hyp2::rotation(1.0)}}, {}), Error);
    CHECK_THROWS_AS(LatticePresentation({{"A", A}}, {Word{{0, 1}}}), Error);
    const LatticePresentation ok({{"A", A}}, {});
    CHECK(ok.euler_characteristic() == 0);
}

TEST_CASE("gamma2 preset") {
    const auto g = builtin_lattice("gamma2");
    CHECK(g.polygon.area == doctest::Approx(2 * kPi).epsilon(1e-12));
    CHECK(g.cusps.size() == 3);
    CHECK(g.frames.size() == 4);
    CHECK(g.polygon.ideal_vertex_count() == 4);
    for (const auto& c : g.cusps) {
        const auto p = g.presentation.evaluate(c.primitive_parabolic);
        CHECK(hyp2::classify(p).kind == hyp2::Kind::Parabolic);
        const auto m = hyp2::compose(hyp2::compose(hyp2::inverse(c.normalizer), p), c.normalizer);
        CHECK(hyp2::psl_distance(m, hyp2::unipotent(c.width)) < 1e-9);
    }
    for (const auto& s : g.polygon.sides) {
        const auto& partner = g.polygon.sides[static_cast<std::size_t>(s.partner)];
        CHECK(hyp2::psl_distance(hyp2::compose(s.pairing_element, partner.pairing_element), hyp2::identity()) < 1e-12);
    }
}

TEST_CASE("dirichlet domain reproduces the gamma2 polygon") {
    const auto g = builtin_lattice("gamma2");
    const auto d = dirichlet_domain(g.presentation, PointH::i(), kDefaultWordBound);
    CHECK(d.area == doctest::Approx(2 * kPi).epsilon(1e-9));
    REQUIRE(d.sides.size() == 4);
    for (BoundaryPoint b : {BoundaryPoint{-1, false}, BoundaryPoint{0, false}, BoundaryPoint{1, false},
                            BoundaryPoint::at_infinity()})
        CHECK(has_vertex(d, b));
    for (const auto& s : g.polygon.sides) {
        const bool found = std::any_of(d.sides.begin(), d.sides.end(),
                                       [&](const Side& t) { return same_geodesic(s.geodesic, t.geodesic, 1e-9); });
        CHECK(found);
    }
}

TEST_CASE("dirichlet domain at an off-center point") {
    const auto g = builtin_lattice("gamma2");
    const auto d = dirichlet_domain(g.presentation, PointH(0.1, 1.7), 8);
    CHECK(std::abs(d.area - 2 * kPi) <= 1e-6);
    CHECK_THROWS_AS(dirichlet_domain(g.presentation, PointH::i(), 0), Error);
    try {
        dirichlet_domain(g.presentation, PointH::i(), 0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AreaMismatch);
    }
}

TEST_CASE("schottky pair gives four sides") {
    const auto a = hyp2::translation(10.0);
    const auto h = hyp2::compose(hyp2::rotation(kPi / 2), hyp2::unipotent(50.0));
    const auto b = hyp2::compose(hyp2::compose(h, a), hyp2::inverse(h));
    const LatticePresentation pres({{"a", a}, {"b", b}}, {});
    CHECK(dirichlet_side_words(pres, PointH::i(), 2).size() == 4);
}

TEST_CASE("punctured square torus preset") {
    const auto t = builtin_lattice("punctured_square_torus");
    CHECK(t.polygon.area == doctest::Approx(2 * kPi).epsilon(1e-9));
    CHECK(t.cusps.size() == 1);
    CHECK(t.polygon.sides.size() == 4);
    const double s = std::sqrt(2.0);
    for (double x : {s + 1, s - 1, -(s + 1), -(s - 1)}) CHECK(has_vertex(t.polygon, {x, false}));
    const auto c = t.presentation.evaluate(t.cusps[0].primitive_parabolic);
    CHECK(std::abs(std::abs(c.trace()) - 2.0) <= 1e-9);
    CHECK_THROWS_AS(builtin_lattice("punctured_square_torus", {1.0, 1.0}), Error);
    // Non-default lengths on the constraint curve still give area 2 pi.
    const double l1 = 1.2;
    const double l2 = 2.0 * std::asinh(1.0 / std::sinh(l1 / 2));
    const auto t2 = builtin_lattice("punctured_square_torus", {l1, l2});
    CHECK(t2.polygon.area == doctest::Approx(2 * kPi).epsilon(1e-9));
    const auto d = dirichlet_domain(t.presentation, PointH::i(), 6);
    CHECK(d.sides.size() == 4);
}

TEST_CASE("reduction basics") {
    const auto g = builtin_lattice("gamma2");
    const UnitTangent inside = UnitTangent::upright_at(PointH(0.2, 1.3));
    CHECK(reduce(inside, g).deck_word.empty());
    const UnitTangent moved(hyp2::compose(g.presentation.element(0), inside.rep()));
    const auto r = reduce(moved, g);
    CHECK(r.deck_word == Word{{0, -1}});
    CHECK(hyp2::psl_distance(r.rep.rep(), inside.rep()) < 1e-12);
}

TEST_CASE("reduction replay, idempotence and equivariance") {
    for (const char* name : {"gamma2", "punctured_square_torus"}) {
        const auto g = builtin_lattice(name);
        random::Stream rng(21, 0);
        for (int k = 0; k < 300; ++k) {
            const UnitTangent x = random_tangent(rng, g.polygon.center, 8.0);
            const auto r = reduce(x, g);
            CHECK(g.polygon.contains(r.rep.base_point(), 1e-9));
            const auto replay = hyp2::compose(g.presentation.evaluate(r.deck_word), x.rep());
            CHECK(hyp2::psl_distance(replay, r.rep.rep()) < 1e-9);
            CHECK(reduce(r.rep, g).deck_word.empty());
            for (std::size_t j = 0; j < g.presentation.rank(); ++j) {
                const UnitTangent y(hyp2::compose(g.presentation.element(static_cast<int>(j)), x.rep()));
                CHECK(hyp2::psl_distance(reduce(y, g).rep.rep(), r.rep.rep()) < 1e-8);
            }
        }
    }
}

TEST_CASE("reduction from far away") {
    // At distance 30 the raw entries are ~e^15, so the replayed product is
    // only determined up to |deck| * |x| * eps; compare on that scale.
    const auto g = builtin_lattice("gamma2");
    random::Stream rng(24, 0);
    for (int k = 0; k < 300; ++k) {
        const UnitTangent x = random_tangent(rng, g.polygon.center, 30.0);
        const auto r = reduce(x, g);
        CHECK(g.polygon.contains(r.rep.base_point(), 1e-9));
        const auto w = g.presentation.evaluate(r.deck_word);
        const auto replay = hyp2::compose(w, x.rep());
        const double scale = w.max_abs_entry() * x.rep().max_abs_entry();
        CHECK(hyp2::psl_distance(replay, r.rep.rep()) / scale < 1e-13);
    }
}

TEST_CASE("unaccelerated descent decreases distance to the center") {
    const auto g = builtin_lattice("gamma2");
    random::Stream rng(22, 0);
    struct Track {
        const SurfaceGeometry& g;
        GroupElement cur;
        double last;
        bool monotone = true;
        void side(int s) {
            cur = hyp2::compose(g.polygon.sides[static_cast<std::size_t>(s)].pairing_inverse, cur);
            const double d = hyp2::distance(UnitTangent(cur).base_point(), g.polygon.center);
            if (d > last + 1e-9) monotone = false;
            last = d;
        }
        void cusp(int, long long) {}
    };
    ReduceOptions opt;
    opt.accelerate = false;
    for (int k = 0; k < 200; ++k) {
        const UnitTangent x = random_tangent(rng, g.polygon.center, 12.0);
        Track t{g, x.rep(), hyp2::distance(x.base_point(), g.polygon.center)};
        reduce_with(x.rep(), g, t, opt);
        CHECK(t.monotone);
    }
}

TEST_CASE("cusp neighborhoods") {
    const auto g = builtin_lattice("gamma2");
    const auto nb = cusp_neighborhoods(g, 1.0);
    CHECK(nb.sectors.size() == 3);
    CHECK(nb.core_area == doctest::Approx(2 * kPi - 6 * std::exp(-1.0)));
    // the sector at infinity is {|Re z| <= 1, Im z > e}
    CHECK_FALSE(nb.in_core(g, PointH(0.5, std::exp(1.0) * 1.01)));
    CHECK(nb.in_core(g, PointH(0.5, std::exp(1.0) * 0.99)));
    const auto pos = cusp_position(g, PointH(0.9, 10.0));
    CHECK(pos.cusp == 0);
    CHECK(pos.log_height == doctest::Approx(std::log(10.0)));

    const auto t = builtin_lattice("punctured_square_torus");
    CHECK(cusp_neighborhoods(t, t.disjoint_height).sectors.size() == 1);
    const auto deep = cusp_neighborhoods(g, 12.0);
    CHECK(deep.sectors[0].area == doctest::Approx(2 * std::exp(-12.0)));
}

TEST_CASE("haar sampler cusp tail") {
    const auto g = builtin_lattice("gamma2");
    const auto nb = cusp_neighborhoods(g, g.disjoint_height);
    random::Stream rng(23, 0);
    const int n = 100000;
    std::vector<double> heights;
    std::vector<double> angles;
    for (int k = 0; k < n; ++k) {
        const auto x = haar_sample(g, nb, rng);
        const auto z = x.base_point();
        CHECK(g.polygon.contains(z, 1e-9));
        heights.push_back(cusp_position(g, z).log_height);
    }
    for (double h : {1.0, 2.0, 3.0}) {
        const double p = 6.0 * std::exp(-h) / (2 * kPi);
        const double emp = static_cast<double>(std::count_if(heights.begin(), heights.end(), [&](double v) { return v > h; })) / n;
        const double se = std::sqrt(p * (1 - p) / n);
        CHECK(std::abs(emp - p) <= 3 * se);
    }
}
