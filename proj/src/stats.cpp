#include "covwalk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

namespace covwalk::stats {

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw Error(ErrorCode::DegenerateSamples, "quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, 0.5);
}

double ks_distance(const std::vector<double>& sorted, const std::function<double(double)>& cdf) {
    const auto n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double hill_tail_index(const std::vector<double>& samples, double center, double fraction) {
    std::vector<double> dev;
    dev.reserve(samples.size());
    for (double x : samples) dev.push_back(std::abs(x - center));
    std::sort(dev.begin(), dev.end(), std::greater<>());
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(dev.size())));
    if (k < 2 || k >= dev.size() || !(dev[k] > 0.0))
        throw Error(ErrorCode::DegenerateSamples, "too few distinct tail samples for the Hill estimator");
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += std::log(dev[i] / dev[k]);
    return static_cast<double>(k) / s;
}

double cauchy_cdf(double x, double location, double scale) {
    return 0.5 + std::atan((x - location) / scale) / std::numbers::pi;
}

double normal_cdf(double x, double mean, double sd) { return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2)); }

CauchyFit cauchy_fit(const std::vector<double>& samples) {
    if (samples.size() < 100)
        throw Error(ErrorCode::DegenerateSamples, "Cauchy fit needs at least 100 samples, got " + std::to_string(samples.size()));
    std::vector<double> s = samples;
    std::sort(s.begin(), s.end());
    CauchyFit fit;
    fit.n = s.size();
    fit.location = quantile_sorted(s, 0.5);
    fit.scale = 0.5 * (quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25));
    if (!(fit.scale > 0.0)) throw Error(ErrorCode::DegenerateSamples, "interquartile range is zero");
    fit.ks_distance = ks_distance(s, [&](double x) { return cauchy_cdf(x, fit.location, fit.scale); });
    fit.tail_index = hill_tail_index(s, fit.location);
    return fit;
}

std::pair<double, double> cauchy_mle(const std::vector<double>& samples) {
    const CauchyFit start = cauchy_fit(samples);
    double mu = start.location, c = start.scale;
    const auto n = static_cast<double>(samples.size());
    for (int it = 0; it < 200; ++it) {
        // Scale: the likelihood equation sum 1/(1 + ((x-mu)/c)^2) = n/2 is monotone in c.
        double lo = c * 1e-3, hi = c * 1e3;
        for (int b = 0; b < 100; ++b) {
            const double mid = std::sqrt(lo * hi);
            double s = 0.0;
            for (double x : samples) s += 1.0 / (1.0 + (x - mu) * (x - mu) / (mid * mid));
            (s < 0.5 * n ? lo : hi) = mid;
        }
        c = std::sqrt(lo * hi);
        // Location: reweighted mean.
        double sw = 0.0, swx = 0.0;
        for (double x : samples) {
            const double w = 1.0 / (c * c + (x - mu) * (x - mu));
            sw += w;
            swx += w * x;
        }
        const double next = swx / sw;
        if (std::abs(next - mu) < 1e-12 * c) {
            mu = next;
            break;
        }
        mu = next;
    }
    return {mu, c};
}

GaussianFit gaussian_fit(const std::vector<double>& samples) {
    if (samples.size() < 2) throw Error(ErrorCode::DegenerateSamples, "Gaussian fit needs at least 2 samples");
    GaussianFit fit;
    fit.n = samples.size();
    const auto n = static_cast<double>(samples.size());
    fit.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : samples) ss += (x - fit.mean) * (x - fit.mean);
    fit.sd = std::sqrt(ss / (n - 1.0));
    if (!(fit.sd > 0.0)) throw Error(ErrorCode::DegenerateSamples, "samples have zero spread");
    fit.standard_error = fit.sd / std::sqrt(n);
    std::vector<double> s = samples;
    std::sort(s.begin(), s.end());
    fit.ks_distance = ks_distance(s, [&](double x) { return normal_cdf(x, fit.mean, fit.sd); });
    fit.tail_index = samples.size() >= 100 ? hill_tail_index(s, fit.mean) : 0.0;
    return fit;
}

namespace {

std::vector<double> ranks(const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j);
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double rank_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::DegenerateSamples, "rank correlation needs paired samples");
    const auto rx = ranks(x), ry = ranks(y);
    const auto n = static_cast<double>(x.size());
    const double m = 0.5 * (n - 1.0);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - m) * (ry[i] - m);
        sxx += (rx[i] - m) * (rx[i] - m);
        syy += (ry[i] - m) * (ry[i] - m);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

MeanEstimate haar_mean_sigma(const cover::CoverModel& model, const hyp2::GroupElement& g, int samples,
                             std::uint64_t seed, int bootstrap, double haar_log_height) {
    const bool trivial = hyp2::psl_distance(g, hyp2::identity()) == 0.0;
    if (!trivial && model.spec().any_unfolded())
        throw Error(ErrorCode::NonIntegrableConfiguration,
                    "sigma(., g) is not Haar-integrable when a cusp is unfolded (v_j != 0)");
    if (samples < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 samples");
    const auto d = static_cast<std::size_t>(model.d());
    const auto nbhd = fuchsian::cusp_neighborhoods(model.geometry(), haar_log_height);
    random::Stream rng(seed, 0);
    std::vector<std::vector<double>> values(d, std::vector<double>(static_cast<std::size_t>(samples)));
    for (int k = 0; k < samples; ++k) {
        const auto p = model.lift(fuchsian::haar_sample(model.geometry(), nbhd, rng));
        const auto q = trivial ? p : model.apply_step(p, g);
        for (std::size_t j = 0; j < d; ++j)
            values[j][static_cast<std::size_t>(k)] = static_cast<double>(q.index[j] - p.index[j]);
    }
    MeanEstimate est;
    est.n = static_cast<std::size_t>(samples);
    random::Stream boot(seed, 1);
    const auto n = static_cast<double>(samples);
    for (std::size_t j = 0; j < d; ++j) {
        const auto& v = values[j];
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        est.mean.push_back(mean);
        est.standard_error.push_back(std::sqrt(ss / (n - 1.0) / n));
        std::vector<double> means;
        for (int b = 0; b < bootstrap; ++b) {
            double s = 0.0;
            for (int k = 0; k < samples; ++k) s += v[boot() % v.size()];
            means.push_back(s / n);
        }
        std::sort(means.begin(), means.end());
        est.lo.push_back(means.empty() ? mean : quantile_sorted(means, 0.00135));
        est.hi.push_back(means.empty() ? mean : quantile_sorted(means, 0.99865));
    }
    return est;
}

std::vector<double> orbit_drift(const cover::FiniteOrbit& orbit, const walk::MeasureSpec& m) {
    if (!m.is_atomic()) throw Error(ErrorCode::InvalidArgument, "orbit drift needs an atomic measure");
    const auto& atoms = m.atom_list();
    const std::size_t d = orbit.states.front().index.size();
    std::vector<double> out(d, 0.0);
    // Every atom permutes a finite orbit, so the uniform measure is stationary.
    for (std::size_t s = 0; s < orbit.states.size(); ++s)
        for (std::size_t a = 0; a < atoms.size(); ++a)
            for (std::size_t j = 0; j < d; ++j)
                out[j] += atoms[a].probability * static_cast<double>(orbit.delta[s][a][j]);
    for (double& x : out) x /= static_cast<double>(orbit.states.size());
    return out;
}

DriftSummary drift_summary(const std::vector<walk::CheckpointRecord>& records, std::optional<std::vector<double>> target,
                           double tolerance) {
    std::map<int, const walk::CheckpointRecord*> last;
    for (const auto& r : records) {
        auto& slot = last[r.trajectory];
        if (slot == nullptr || r.n > slot->n || (r.n == slot->n && r.time >= slot->time)) slot = &r;
    }
    DriftSummary out;
    out.target = std::move(target);
    out.tolerance = tolerance;
    for (const auto& [traj, r] : last) out.terminal.push_back(r->drift);
    if (out.terminal.empty()) return out;
    const std::size_t d = out.terminal.front().size();
    const auto K = static_cast<double>(out.terminal.size());
    out.mean.assign(d, 0.0);
    for (const auto& t : out.terminal)
        for (std::size_t j = 0; j < d; ++j) out.mean[j] += t[j] / K;
    out.covariance.assign(d, std::vector<double>(d, 0.0));
    if (out.terminal.size() > 1)
        for (const auto& t : out.terminal)
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    out.covariance[i][j] += (t[i] - out.mean[i]) * (t[j] - out.mean[j]) / (K - 1.0);
    const std::vector<double> goal = out.target.value_or(std::vector<double>(d, 0.0));
    std::size_t within = 0;
    for (const auto& t : out.terminal) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += (t[j] - goal[j]) * (t[j] - goal[j]);
        within += std::sqrt(s) <= tolerance;
    }
    out.fraction_within = static_cast<double>(within) / K;
    return out;
}

namespace {

double projected_range(const std::vector<const walk::CheckpointRecord*>& rs, const std::vector<double>& dir) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto* r : rs) {
        double p = 0.0;
        for (std::size_t j = 0; j < dir.size(); ++j) p += dir[j] * r->drift[j];
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    return rs.empty() ? 0.0 : hi - lo;
}

}  // namespace

OscillationReport accumulation_diagnostic(const std::vector<walk::CheckpointRecord>& records,
                                          const cover::CoverSpec& spec, long long n0, long long n_max,
                                          double ec_threshold, double complement_threshold) {
    std::map<int, std::vector<const walk::CheckpointRecord*>> by_traj;
    for (const auto& r : records)
        if (r.n >= n0 && r.n <= n_max) by_traj[r.trajectory].push_back(&r);
    OscillationReport rep;
    rep.n0 = n0;
    rep.n_max = n_max;
    rep.ec_threshold = ec_threshold;
    rep.complement_threshold = complement_threshold;
    const auto d = static_cast<std::size_t>(spec.d);
    std::size_t exceeds = 0, below = 0, both = 0;
    for (const auto& [traj, rs] : by_traj) {
        double ec = 0.0, comp = 0.0, total = 0.0;
        for (const auto& dir : spec.ec_orthonormal) ec = std::max(ec, projected_range(rs, dir));
        for (const auto& dir : spec.complement_orthonormal) comp = std::max(comp, projected_range(rs, dir));
        for (std::size_t j = 0; j < d; ++j) {
            std::vector<double> e(d, 0.0);
            e[j] = 1.0;
            total = std::max(total, projected_range(rs, e));
        }
        rep.ec_range.push_back(ec);
        rep.complement_range.push_back(comp);
        rep.total_range.push_back(total);
        const bool a = ec > ec_threshold, b = comp < complement_threshold;
        exceeds += a;
        below += b;
        both += a && b;
    }
    const auto K = static_cast<double>(std::max<std::size_t>(1, by_traj.size()));
    rep.fraction_ec_exceeds = static_cast<double>(exceeds) / K;
    rep.fraction_complement_below = static_cast<double>(below) / K;
    rep.fraction_separated = static_cast<double>(both) / K;
    return rep;
}

std::string recurrence_verdict(int d, int ec_dim) {
    return (d == 1 || (d == 2 && ec_dim == 0)) ? "recurrent" : "transient";
}

RecurrenceReport recurrence_report(const walk::WalkResult& result, const cover::CoverSpec& spec, long long n) {
    RecurrenceReport rep;
    rep.n = n;
    rep.verdict_hint = recurrence_verdict(spec.d, spec.ec_dim());
    std::vector<double> firsts;
    std::size_t returned = 0, counted = 0;
    for (const auto& s : result.summaries) {
        if (!s.ok) continue;
        ++counted;
        if (s.first_return >= 1 && s.first_return <= n) {
            ++returned;
            firsts.push_back(static_cast<double>(s.first_return));
        }
    }
    rep.return_fraction = counted ? static_cast<double>(returned) / static_cast<double>(counted) : 0.0;
    if (!firsts.empty()) rep.median_first_return = median(firsts);
    std::vector<double> excursions;
    for (const auto& r : result.records)
        if (r.n == n) excursions.push_back(r.max_excursion);
    if (!excursions.empty()) rep.median_max_excursion = median(excursions);
    return rep;
}

}  // namespace covwalk::stats
