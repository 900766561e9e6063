#include <cmath>
#include <numeric>

#include "covwalk/cover.hpp"
#include "doctest.h"

using namespace covwalk;
using namespace covwalk::cover;
using fuchsian::builtin_lattice;

namespace {

CoverModel gamma2_model() {
    auto g = builtin_lattice("gamma2");
    auto spec = validate_cover(g.presentation, g.cusps, 1, {{1}, {0}});
    return CoverModel(std::move(g), std::move(spec));
}

CoverModel torus_model() {
    auto g = builtin_lattice("punctured_square_torus");
    auto spec = validate_cover(g.presentation, g.cusps, 1, {{0}, {1}});
    return CoverModel(std::move(g), std::move(spec));
}

GroupElement random_step(random::Stream& rng, double tau_max) {
    return hyp2::compose(hyp2::compose(hyp2::rotation(rng.uniform(0, hyp2::kTwoPi)),
                                       hyp2::translation(rng.uniform(0.2, tau_max))),
                         hyp2::rotation(rng.uniform(0, hyp2::kTwoPi)));
}

IntVec diff(const IntVec& a, const IntVec& b) {
    IntVec r = a;
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= b[k];
    return r;
}

}  // namespace

TEST_CASE("smith invariants and row basis") {
    CHECK(smith_invariants({{1, 0}, {0, 1}}) == std::vector<long long>{1, 1});
    CHECK(smith_invariants({{2, 0}, {0, 3}}) == std::vector<long long>{1, 6});
    CHECK(smith_invariants({{1, 0}, {1, 0}}) == std::vector<long long>{1});
    CHECK(smith_invariants({{2}, {4}}) == std::vector<long long>{2});
    CHECK(smith_invariants({{0, 0}}).empty());
    CHECK(integer_row_basis({{1}, {0}, {-1}}) == std::vector<IntVec>{{1}});
    CHECK(integer_row_basis({{0, 0}}).empty());
    CHECK(integer_row_basis({{2, 0}, {3, 0}}) == std::vector<IntVec>{{1, 0}});
}

TEST_CASE("validate_cover on presets") {
    const auto g = builtin_lattice("gamma2");
    const auto s = validate_cover(g.presentation, g.cusps, 1, {{1}, {0}});
    CHECK(s.v == std::vector<IntVec>{{1}, {0}, {-1}});
    CHECK(s.unfolded == std::vector<bool>{true, false, true});
    CHECK(s.ec_dim() == 1);
    CHECK(s.complement_orthonormal.empty());

    const auto t = builtin_lattice("punctured_square_torus");
    for (const auto& w : std::vector<std::vector<IntVec>>{{{1}, {0}}, {{0}, {1}}, {{2}, {3}}}) {
        const auto st = validate_cover(t.presentation, t.cusps, 1, w);
        CHECK(st.v == std::vector<IntVec>{{0}});
        CHECK_FALSE(st.any_unfolded());
        CHECK(st.ec_dim() == 0);
    }
    const auto st2 = validate_cover(t.presentation, t.cusps, 2, {{1, 0}, {0, 1}});
    CHECK(st2.v == std::vector<IntVec>{{0, 0}});
    CHECK(st2.complement_orthonormal.size() == 2);

    try {
        validate_cover(g.presentation, g.cusps, 2, {{1, 0}, {1, 0}});
        FAIL("expected QuotientNotFreeRankD");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::QuotientNotFreeRankD);
    }
    try {
        validate_cover(t.presentation, t.cusps, 1, {{2}, {4}});
        FAIL("expected QuotientNotFreeRankD");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::QuotientNotFreeRankD);
    }
    CHECK_THROWS_AS(validate_cover(g.presentation, g.cusps, 1, {{1}}), Error);
    CHECK_THROWS_AS(validate_cover(g.presentation, g.cusps, 2, {{1}, {0}}), Error);
}

TEST_CASE("relators must be killed") {
    // A one-relator presentation of Z^2 inside PSL2: two commuting translations.
    using fuchsian::Generator;
    const fuchsian::LatticePresentation pres({Generator{"a", hyp2::translation(1.0)}, Generator{"b", hyp2::translation(2.0)}},
                                             {fuchsian::Word{{0, 2}, {1, -1}}}, {7});
    try {
        validate_cover(pres, {}, 1, {{1}, {1}});
        FAIL("expected RelatorNotKilled");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RelatorNotKilled);
        CHECK(e.line() == 7);
    }
    CHECK_NOTHROW(validate_cover(pres, {}, 1, {{1}, {2}}));
}

TEST_CASE("unfolded predicate on random surjective weights") {
    const auto g = builtin_lattice("gamma2");
    random::Stream rng(21, 0);
    int checked = 0;
    while (checked < 100) {
        const int d = 1 + static_cast<int>(rng() % 2);
        std::vector<IntVec> w(2, IntVec(static_cast<std::size_t>(d)));
        for (auto& row : w)
            for (auto& x : row) x = static_cast<long long>(rng() % 7) - 3;
        bool surjective = false;
        if (d == 1) surjective = std::gcd(w[0][0], w[1][0]) == 1;
        else surjective = std::llabs(w[0][0] * w[1][1] - w[0][1] * w[1][0]) == 1;
        if (!surjective) {
            CHECK_THROWS_AS(validate_cover(g.presentation, g.cusps, d, w), Error);
            continue;
        }
        const auto s = validate_cover(g.presentation, g.cusps, d, w);
        for (std::size_t j = 0; j < g.cusps.size(); ++j) {
            const IntVec v = phi(s, g.cusps[j].primitive_parabolic);
            CHECK(s.unfolded[j] == (norm(v) > 0));
        }
        ++checked;
    }
}

TEST_CASE("torus drift counts g2 steps exactly") {
    const auto m = torus_model();
    const auto& pres = m.geometry().presentation;
    const GroupElement g1 = pres.element(0), g2 = pres.element(1);
    const CoverPoint x0 = m.lift(UnitTangent());
    CHECK(x0.index == IntVec{0});

    const CoverPoint p2 = m.apply_step(x0, g2);
    CHECK(diff(p2.index, x0.index) == IntVec{1});
    CHECK(hyp2::psl_distance(p2.rep.rep(), x0.rep.rep()) < 1e-12);
    const CoverPoint p1 = m.apply_step(x0, g1);
    CHECK(diff(p1.index, x0.index) == IntVec{0});
    CHECK(hyp2::psl_distance(p1.rep.rep(), x0.rep.rep()) < 1e-12);

    const CoverPoint same = m.apply_step(p2, hyp2::identity());
    CHECK(same.index == p2.index);
    CHECK(hyp2::psl_distance(same.rep.rep(), p2.rep.rep()) == 0.0);

    // Floating steps stay on the orbit of x0 only while rounding error, expanded
    // by about e^l per step, is small: short words are checked directly.
    random::Stream rng(22, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<GroupElement> word;
        long long count = 0;
        for (int k = 0; k < 12; ++k) {
            const bool two = rng.uniform() < 0.5;
            word.push_back(two ? g2 : g1);
            count += two;
        }
        CHECK(m.sigma(x0, word) == IntVec{count});
    }
    CHECK(m.sigma(x0, {}) == IntVec{0});

    // Long words run on the enumerated orbit, which is {x0}.
    const auto orbit = enumerate_orbit(m, x0, {g1, g2});
    REQUIRE(orbit.has_value());
    CHECK(orbit->states.size() == 1);
    CHECK(orbit->next == std::vector<std::vector<int>>{{0, 0}});
    CHECK(orbit->delta == std::vector<std::vector<IntVec>>{{{0}, {1}}});
    const auto sym = enumerate_orbit(m, x0, {g1, hyp2::inverse(g1), g2, hyp2::inverse(g2)});
    REQUIRE(sym.has_value());
    CHECK(sym->delta == std::vector<std::vector<IntVec>>{{{0}, {0}, {1}, {-1}}});

    // A generic start has an infinite orbit.
    const CoverPoint y = m.lift(UnitTangent(random_step(rng, 1.0)));
    CHECK_FALSE(enumerate_orbit(m, y, {g1, g2}, 200).has_value());
}

TEST_CASE("cocycle and inverse identities") {
    for (const auto& m : {gamma2_model(), torus_model()}) {
        random::Stream rng(23, 0);
        for (int trial = 0; trial < 200; ++trial) {
            const CoverPoint p = m.lift(UnitTangent(random_step(rng, 3.0)));
            std::vector<GroupElement> u, v;
            const auto lu = rng() % 51, lv = rng() % 51;
            for (std::size_t k = 0; k < lu; ++k) u.push_back(random_step(rng, 2.0));
            for (std::size_t k = 0; k < lv; ++k) v.push_back(random_step(rng, 2.0));
            std::vector<GroupElement> uv = u;
            uv.insert(uv.end(), v.begin(), v.end());

            CoverPoint pu = p;
            for (const auto& g : u) m.step(pu, g);
            const IntVec lhs = m.sigma(p, uv);
            IntVec rhs = m.sigma(p, u);
            const IntVec tail = m.sigma(pu, v);
            for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] += tail[k];
            CHECK(lhs == rhs);

            const auto path = m.sigma_path(p, uv);
            REQUIRE(path.size() == uv.size());
            if (!uv.empty()) CHECK(path.back() == lhs);

            const GroupElement g = random_step(rng, 3.0);
            const CoverPoint pg = m.apply_step(p, g);
            const IntVec back = m.sigma(pg, {hyp2::inverse(g)});
            const IntVec fwd = diff(pg.index, p.index);
            CHECK(fwd[0] + back[0] == 0);
        }
    }
}

TEST_CASE("base walk matches the plain quotient walk") {
    const auto m = gamma2_model();
    random::Stream rng(24, 0);
    CoverPoint p = m.lift(UnitTangent());
    GroupElement plain = fuchsian::reduce(UnitTangent(), m.geometry()).rep.rep();
    for (int k = 0; k < 2000; ++k) {
        const GroupElement g = random_step(rng, 2.0);
        m.step(p, g);
        plain = hyp2::renormalize(fuchsian::reduce(UnitTangent(hyp2::compose(plain, g)), m.geometry()).rep.rep());
        REQUIRE(hyp2::psl_distance(p.rep.rep(), plain) == 0.0);
    }
}

TEST_CASE("drift is intrinsic across Dirichlet centers") {
    const auto base = builtin_lattice("gamma2");
    auto poly = fuchsian::dirichlet_domain(base.presentation, hyp2::PointH(0.1, 1.7));
    auto other = fuchsian::make_geometry("gamma2-shifted", base.presentation, std::move(poly));
    auto other_spec = validate_cover(other.presentation, other.cusps, 1, {{1}, {0}});
    const CoverModel m2(std::move(other), std::move(other_spec));
    const auto m1 = gamma2_model();

    // Two index maps on the same points: re-reducing each representative of
    // the first model in the second model's domain.
    random::Stream rng(25, 0);
    CoverPoint p1 = m1.lift(UnitTangent(random_step(rng, 1.0)));
    long long worst = 0;
    for (int k = 0; k < 10000; ++k) {
        m1.step(p1, random_step(rng, 2.0));
        const CoverPoint p2 = m2.lift(p1.rep);
        worst = std::max(worst, std::llabs(p2.index[0]));
    }
    MESSAGE("max index difference " << worst);
    // weight 1; near a cusp the two polygons differ by at most two translates
    CHECK(worst <= 8 * 1 * 2);
}

TEST_CASE("cusp excursions") {
    CHECK(cusp_excursions({}, 1.0).empty());
    std::vector<TrajectorySample> flat;
    for (int k = 0; k < 10; ++k) flat.push_back({k, 0, 0.5, {k}});
    CHECK(cusp_excursions(flat, 1.0).empty());

    // Geodesic over the cusp at infinity: a semicircle of radius L about 0.
    const auto m = gamma2_model();
    const double L = 60.0;
    const GroupElement top = GroupElement::normalized(L, -L, 1.0, 1.0);
    const double T = std::log(4.0 * L);
    CoverPoint p = m.lift(hyp2::geodesic_flow(UnitTangent(top), -T));
    std::vector<TrajectorySample> samples;
    const double dt = 0.02;
    const auto a = hyp2::translation(dt);
    for (long long k = 0; k * dt <= 2 * T; ++k) {
        const auto pos = fuchsian::cusp_position(m.geometry(), p.rep.base_point());
        samples.push_back({k, pos.cusp, pos.log_height, p.index});
        m.step(p, a);
    }
    const double h = 1.0;
    const auto ex = cusp_excursions(samples, h);
    const ExcursionRecord* deep = nullptr;
    for (const auto& e : ex)
        if (e.cusp == 0 && (deep == nullptr || e.max_height > deep->max_height)) deep = &e;
    REQUIRE(deep != nullptr);
    CHECK(deep->max_height == doctest::Approx(std::log(L)).epsilon(1e-3));
    // Horizontal travel is 2 sqrt(L^2 - e^2h); the cusp at infinity has width 2 and v = 1.
    const double winding = 2.0 * std::sqrt(L * L - std::exp(2 * h)) / 2.0;
    CHECK(std::abs(std::llabs(deep->index_delta[0]) - winding) <= 2.0);

    // Excursion deltas plus complement deltas recover the total.
    long long total = 0;
    std::vector<bool> owned(samples.size(), false);
    for (const auto& e : ex) {
        total += e.index_delta[0];
        for (long long s = std::max(1LL, e.entry_step); s <= e.exit_step; ++s) owned[static_cast<std::size_t>(s)] = true;
    }
    for (std::size_t s = 1; s < samples.size(); ++s)
        if (!owned[s]) total += samples[s].index[0] - samples[s - 1].index[0];
    CHECK(total == samples.back().index[0] - samples.front().index[0]);
}

TEST_CASE("cusp drift grows at most like the height") {
    const std::vector<GroupElement> support{hyp2::translation(1.0),
                                            hyp2::compose(hyp2::rotation(1.0), hyp2::translation(1.5))};
    const auto m = gamma2_model();
    std::vector<double> ratios;
    for (int t = 2; t <= 8; ++t) {
        random::Stream rng(26, static_cast<std::uint64_t>(t));
        ratios.push_back(sigma_cusp_ratio(m, 0, t, support, 1000, rng));
    }
    for (double r : ratios) {
        CHECK(r > 0.0);
        CHECK(r < 5.0);
    }
    // no growth trend: the last slice is not larger than the first by more than a factor 2
    CHECK(ratios.back() < 2.0 * ratios.front() + 0.1);

    random::Stream rng0(26, 100);
    CHECK(std::isfinite(sigma_cusp_ratio(m, 0, 0.0, support, 200, rng0)));

    const auto tm = torus_model();
    random::Stream rng1(27, 0), rng2(27, 1);
    const double low = sigma_cusp_ratio(tm, 0, 3.0, support, 300, rng1);
    const double high = sigma_cusp_ratio(tm, 0, 9.0, support, 300, rng2);
    CHECK(high < low + 1e-12);
    CHECK(high < 1e-2);
}
