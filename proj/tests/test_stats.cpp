#include <cmath>

#include "covwalk/stats.hpp"
#include "doctest.h"

using namespace covwalk;
using namespace covwalk::stats;

namespace {

std::vector<double> cauchy_samples(random::Stream& rng, std::size_t n, double c, double loc = 0.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = loc + c * rng.cauchy();
    return v;
}

std::vector<double> normal_samples(random::Stream& rng, std::size_t n, double mean = 0.0, double sd = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = mean + sd * rng.normal();
    return v;
}

cover::CoverModel model_for(const std::string& preset, int d, std::vector<cover::IntVec> w) {
    auto g = fuchsian::builtin_lattice(preset);
    auto spec = cover::validate_cover(g.presentation, g.cusps, d, std::move(w));
    return cover::CoverModel(std::move(g), std::move(spec));
}

}  // namespace

TEST_CASE("quantiles and KS") {
    const std::vector<double> s{1, 2, 3, 4};
    CHECK(quantile_sorted(s, 0.5) == 2.5);
    CHECK(quantile_sorted(s, 0.0) == 1.0);
    CHECK(quantile_sorted(s, 1.0) == 4.0);
    CHECK(median({3, 1, 2}) == 2.0);
    // one point at the median of a symmetric law: D = 1/2
    CHECK(ks_distance({0.0}, [](double x) { return cauchy_cdf(x, 0, 1); }) == doctest::Approx(0.5));
}

TEST_CASE("cauchy fit on synthetic samples") {
    random::Stream rng(41, 0);
    const auto s = cauchy_samples(rng, 10000, 1.0);
    const auto fit = cauchy_fit(s);
    CHECK(fit.scale >= 0.95);
    CHECK(fit.scale <= 1.05);
    CHECK(fit.ks_distance <= 0.02);
    CHECK(fit.tail_index > 0.7);
    CHECK(fit.tail_index < 1.3);

    const auto [mu, c] = cauchy_mle(s);
    CHECK(std::abs(mu) < 0.05);
    CHECK(std::abs(c - 1.0) < 0.05);

    CHECK_THROWS_AS(cauchy_fit(std::vector<double>(500, 3.0)), Error);
    CHECK_THROWS_AS(cauchy_fit(std::vector<double>(50, 1.0)), Error);
    try {
        cauchy_fit(std::vector<double>(500, 3.0));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateSamples);
    }

    // median / IQR estimators commute with scaling
    std::vector<double> scaled = s;
    for (auto& x : scaled) x *= 4.0;
    CHECK(cauchy_fit(scaled).scale == doctest::Approx(4.0 * fit.scale).epsilon(1e-14));
}

TEST_CASE("cauchy fit converges over repetitions") {
    random::Stream rng(42, 0);
    int good = 0;
    for (int rep = 0; rep < 50; ++rep) good += std::abs(cauchy_fit(cauchy_samples(rng, 10000, 2.5, 1.0)).scale / 2.5 - 1.0) <= 0.05;
    CHECK(good >= 45);
}

TEST_CASE("hill index separates cauchy from gaussian") {
    random::Stream rng(43, 0);
    int ok = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const double hc = cauchy_fit(cauchy_samples(rng, 10000, 1.0)).tail_index;
        const double hg = gaussian_fit(normal_samples(rng, 10000)).tail_index;
        ok += std::abs(hc - 1.0) < 0.5 && hg >= 3.0;
    }
    CHECK(ok >= 95);
}

TEST_CASE("gaussian fit") {
    random::Stream rng(44, 0);
    const auto g = gaussian_fit(normal_samples(rng, 10000));
    CHECK(g.ks_distance <= 0.02);
    CHECK(g.tail_index >= 3.0);
    const auto shifted = gaussian_fit(normal_samples(rng, 10000, 3.0, 2.0));
    CHECK(std::abs(shifted.mean - 3.0) <= 3.0 * shifted.standard_error);
    CHECK(shifted.sd == doctest::Approx(2.0).epsilon(0.03));
    CHECK_THROWS_AS(gaussian_fit({1.0}), Error);
    CHECK_THROWS_AS(gaussian_fit({1.0, 1.0, 1.0}), Error);
}

TEST_CASE("rank correlation") {
    CHECK(rank_correlation({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(rank_correlation({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    random::Stream rng(45, 0);
    const auto x = normal_samples(rng, 5000), y = normal_samples(rng, 5000);
    CHECK(std::abs(rank_correlation(x, y)) < 0.05);
}

TEST_CASE("haar mean of the drift cocycle") {
    const auto torus = model_for("punctured_square_torus", 1, {{0}, {1}});
    const auto g2 = torus.geometry().presentation.element(1);
    const auto est = haar_mean_sigma(torus, g2, 100000, 46);
    MESSAGE("mean " << est.mean[0] << " se " << est.standard_error[0]);
    CHECK(std::abs(est.mean[0]) <= 3.0 * est.standard_error[0]);
    CHECK(est.lo[0] <= 0.0);
    CHECK(est.hi[0] >= 0.0);

    const auto id = haar_mean_sigma(torus, hyp2::identity(), 1000, 1);
    CHECK(id.mean[0] == 0.0);
    CHECK(id.standard_error[0] == 0.0);

    const auto gamma2 = model_for("gamma2", 1, {{1}, {0}});
    try {
        haar_mean_sigma(gamma2, gamma2.geometry().presentation.element(0), 1000, 1);
        FAIL("expected NonIntegrableConfiguration");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonIntegrableConfiguration);
    }
}

TEST_CASE("haar mean intervals cover zero") {
    const auto torus = model_for("punctured_square_torus", 1, {{0}, {1}});
    const auto g2 = torus.geometry().presentation.element(1);
    int covered = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        const auto est = haar_mean_sigma(torus, g2, 4000, 1000 + rep, 0);
        covered += std::abs(est.mean[0]) <= 3.0 * est.standard_error[0];
    }
    CHECK(covered >= 93);
}

TEST_CASE("drift summaries and exact orbit targets") {
    const auto torus = model_for("punctured_square_torus", 1, {{0}, {1}});
    const auto& p = torus.geometry().presentation;
    const auto x0 = torus.lift(hyp2::UnitTangent());

    const auto half = walk::MeasureSpec::atoms({{p.element(0), 0.5, "g1"}, {p.element(1), 0.5, "g2"}});
    const auto orbit = cover::enumerate_orbit(torus, x0, {p.element(0), p.element(1)});
    REQUIRE(orbit.has_value());
    CHECK(orbit_drift(*orbit, half) == std::vector<double>{0.5});

    const auto sym = walk::MeasureSpec::atoms({{p.element(0), 0.25, "g1"},
                                               {p.element_inverse(0), 0.25, "g1^-1"},
                                               {p.element(1), 0.25, "g2"},
                                               {p.element_inverse(1), 0.25, "g2^-1"}});
    std::vector<hyp2::GroupElement> atoms;
    for (const auto& a : sym.atom_list()) atoms.push_back(a.element);
    CHECK(orbit_drift(*cover::enumerate_orbit(torus, x0, atoms), sym) == std::vector<double>{0.0});

    walk::WalkConfig cfg;
    cfg.steps = 1;
    cfg.trajectories = 1;
    cfg.seed = 5;
    const auto one = walk::run_walk(torus, half, cfg);
    const auto s1 = drift_summary(one.records);
    random::Stream rng(5, 0);
    const double expect = half.sample_atom(rng) == 1 ? 1.0 : 0.0;
    CHECK(s1.terminal == std::vector<std::vector<double>>{{expect}});

    cfg.steps = 2000;
    cfg.trajectories = 40;
    const auto many = walk::run_walk(torus, half, cfg);
    const auto s = drift_summary(many.records, std::vector<double>{0.5}, 0.05);
    CHECK(s.terminal.size() == 40);
    CHECK(s.fraction_within >= 0.95);
    CHECK(std::abs(s.mean[0] - 0.5) < 0.02);
    CHECK(s.covariance[0][0] > 0.0);
}

TEST_CASE("accumulation diagnostic on synthetic records") {
    const double h = std::sqrt(0.5);
    cover::CoverSpec spec;
    spec.d = 2;
    spec.ec_basis = {{1, 1}};
    spec.ec_orthonormal = {{h, h}};
    spec.complement_orthonormal = {{h, -h}};
    std::vector<walk::CheckpointRecord> recs;
    // constant drift: every range is zero
    for (long long n : {10, 100, 1000}) {
        walk::CheckpointRecord r;
        r.trajectory = 0;
        r.n = n;
        r.drift = {0.3, -0.2};
        recs.push_back(r);
    }
    auto rep = accumulation_diagnostic(recs, spec, 1, 1000, 0.1, 0.1);
    REQUIRE(rep.total_range.size() == 1);
    CHECK(rep.total_range[0] == 0.0);
    CHECK(rep.complement_range[0] == 0.0);
    CHECK(rep.fraction_complement_below == 1.0);
    CHECK(rep.fraction_ec_exceeds == 0.0);

    // oscillation along E_C only
    recs.clear();
    const auto& e = spec.ec_orthonormal[0];
    for (int k = 0; k < 6; ++k) {
        walk::CheckpointRecord r;
        r.trajectory = 3;
        r.n = 10 + k;
        const double a = (k % 2 ? 1.0 : -1.0);
        r.drift = {a * e[0], a * e[1]};
        recs.push_back(r);
    }
    rep = accumulation_diagnostic(recs, spec, 0, 100, 0.5, 1e-9);
    CHECK(rep.ec_range[0] == doctest::Approx(2.0));
    CHECK(rep.complement_range[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.fraction_separated == 1.0);
}

TEST_CASE("recurrence report") {
    CHECK(recurrence_verdict(1, 1) == "recurrent");
    CHECK(recurrence_verdict(2, 0) == "recurrent");
    CHECK(recurrence_verdict(2, 1) == "transient");
    CHECK(recurrence_verdict(3, 0) == "transient");

    walk::WalkResult res;
    for (int k = 0; k < 4; ++k) {
        walk::TrajectorySummary s;
        s.trajectory = k;
        s.first_return = k == 3 ? -1 : 10 * (k + 1);
        res.summaries.push_back(s);
        walk::CheckpointRecord r;
        r.trajectory = k;
        r.n = 25;
        r.max_excursion = k;
        res.records.push_back(r);
    }
    cover::CoverSpec spec;
    spec.d = 1;
    const auto rep = recurrence_report(res, spec, 25);
    CHECK(rep.return_fraction == 0.5);
    CHECK(rep.median_first_return == 15.0);
    CHECK(rep.median_max_excursion == 1.5);
    CHECK(rep.verdict_hint == "recurrent");
}
