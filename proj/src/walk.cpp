#include "covwalk/walk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "covwalk/parallel.hpp"

namespace covwalk::walk {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

MeasureSpec MeasureSpec::atoms(std::vector<Atom> atoms) {
    if (atoms.empty()) throw Error(ErrorCode::InvalidArgument, "atomic measure needs at least one atom");
    double total = 0.0;
    for (const auto& a : atoms) {
        if (!(a.probability >= 0.0) || !std::isfinite(a.probability))
            throw Error(ErrorCode::InvalidArgument, "atom probability must be finite and >= 0");
        total += a.probability;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw Error(ErrorCode::InvalidArgument, "atom probabilities sum to " + std::to_string(total) + ", not 1");
    MeasureSpec m;
    double acc = 0.0;
    for (const auto& a : atoms) {
        acc += a.probability;
        m.cumulative_.push_back(acc);
    }
    m.cumulative_.back() = 1.0;
    m.atoms_ = std::move(atoms);
    return m;
}

MeasureSpec MeasureSpec::parametric(double tau_min, double tau_max) {
    if (!(tau_min > 0.0) || !(tau_max >= tau_min) || !std::isfinite(tau_max))
        throw Error(ErrorCode::InvalidArgument, "parametric measure needs 0 < tau_min <= tau_max < inf");
    MeasureSpec m;
    m.tau_min_ = tau_min;
    m.tau_max_ = tau_max;
    return m;
}

std::size_t MeasureSpec::sample_atom(random::Stream& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
}

GroupElement MeasureSpec::sample(random::Stream& rng) const {
    if (is_atomic()) return atoms_[sample_atom(rng)].element;
    const double theta = rng.uniform(0.0, kTwoPi);
    const double tau = rng.uniform(tau_min_, tau_max_);
    const double theta2 = rng.uniform(0.0, kTwoPi);
    return hyp2::compose(hyp2::compose(hyp2::rotation(theta), hyp2::translation(tau)), hyp2::rotation(theta2));
}

namespace {

// Boundary point as an angle on the circle: x -> 2 atan x, infinity -> pi.
double boundary_angle(double x, bool infinite) { return infinite ? std::numbers::pi : 2.0 * std::atan(x); }

double circle_gap(double a, double b) {
    const double d = std::fmod(std::abs(a - b), kTwoPi);
    return std::min(d, kTwoPi - d);
}

std::pair<double, double> fixed_angles(const GroupElement& g) {
    // c x^2 + (d - a) x - b = 0
    const double a = g.a(), b = g.b(), c = g.c(), d = g.d();
    const double tr = a + d;
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0));
    if (std::abs(c) < 1e-14 * (std::abs(a) + std::abs(d))) {
        return {boundary_angle(0.0, true), boundary_angle(b / (d - a), false)};
    }
    const double x1 = (a - d + disc) / (2.0 * c);
    const double x2 = (a - d - disc) / (2.0 * c);
    return {boundary_angle(x1, false), boundary_angle(x2, false)};
}

bool is_hyperbolic(const GroupElement& g) { return std::abs(g.a() + g.d()) > 2.0 + 1e-9; }

}  // namespace

ZariskiResult zariski_density_check(const MeasureSpec& m, std::uint64_t seed) {
    std::vector<GroupElement> support;
    if (m.is_atomic()) {
        for (const auto& a : m.atom_list())
            if (a.probability > 0.0) support.push_back(a.element);
    } else {
        random::Stream rng(seed, 0x5A);
        for (int k = 0; k < 16; ++k) support.push_back(m.sample(rng));
    }
    constexpr std::size_t kMaxWords = 60000;
    constexpr std::size_t kMaxHyperbolic = 64;
    std::vector<GroupElement> layer{hyp2::identity()};
    std::vector<std::pair<double, double>> fixed;
    for (int len = 1; len <= 6 && fixed.size() < kMaxHyperbolic; ++len) {
        std::vector<GroupElement> next;
        for (const auto& w : layer) {
            for (const auto& s : support) {
                const GroupElement g = hyp2::compose(w, s);
                if (is_hyperbolic(g) && fixed.size() < kMaxHyperbolic) fixed.push_back(fixed_angles(g));
                if (next.size() < kMaxWords) next.push_back(g);
            }
        }
        layer = std::move(next);
    }
    if (fixed.empty()) return {false, "no hyperbolic element among support words of length <= 6"};
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        for (std::size_t j = i + 1; j < fixed.size(); ++j) {
            const double gap = std::min({circle_gap(fixed[i].first, fixed[j].first),
                                         circle_gap(fixed[i].first, fixed[j].second),
                                         circle_gap(fixed[i].second, fixed[j].first),
                                         circle_gap(fixed[i].second, fixed[j].second)});
            if (gap > 1e-6) return {true, ""};
        }
    }
    return {false, "every hyperbolic support word shares a boundary fixed point (elementary semigroup)"};
}

std::vector<long long> make_checkpoints(long long steps, long long stride, int per_decade) {
    std::vector<long long> out;
    if (stride > 0)
        for (long long n = stride; n <= steps; n += stride) out.push_back(n);
    if (per_decade > 0) {
        for (int k = 0;; ++k) {
            const double v = std::pow(10.0, static_cast<double>(k) / per_decade);
            const auto n = static_cast<long long>(std::llround(v));
            if (n > steps) break;
            out.push_back(n);
        }
    }
    out.push_back(steps);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void RunningProduct::multiply(const GroupElement& g) {
    const double a = a_ * g.a() + b_ * g.c();
    const double b = a_ * g.b() + b_ * g.d();
    const double c = c_ * g.a() + d_ * g.c();
    const double d = c_ * g.b() + d_ * g.d();
    a_ = a;
    b_ = b;
    c_ = c;
    d_ = d;
    ++length_;
    if (length_ % 64 == 0) {
        const double s = std::max({std::abs(a_), std::abs(b_), std::abs(c_), std::abs(d_)});
        a_ /= s;
        b_ /= s;
        c_ /= s;
        d_ /= s;
        log_scale_ += std::log(s);
    }
}

double RunningProduct::t() const {
    // The true product has det 1, so det(M) = e^{-2 scale} exactly.
    const double f = a_ * a_ + b_ * b_ + c_ * c_ + d_ * d_;
    const double det = std::exp(-2.0 * log_scale_);
    const double top2 = 0.5 * (f + std::sqrt(std::max(0.0, (f - 2.0 * det) * (f + 2.0 * det))));
    return std::max(0.0, 2.0 * log_scale_ + std::log(top2));
}

namespace {

struct TrajectoryState {
    CoverPoint point;
    IntVec start_index;
    hyp2::PointH start_base = hyp2::PointH::i();
    RunningProduct product;
    double max_excursion = 0.0;
};

CheckpointRecord make_record(const CoverModel& model, int traj, long long n, double time, const IntVec& sigma,
                             const UnitTangent& rep, const TrajectoryState& st) {
    CheckpointRecord r;
    r.trajectory = traj;
    r.n = n;
    r.time = time;
    r.sigma = sigma;
    r.drift.resize(sigma.size(), 0.0);
    if (time > 0.0)
        for (std::size_t k = 0; k < sigma.size(); ++k) r.drift[k] = static_cast<double>(sigma[k]) / time;
    const auto pos = fuchsian::cusp_position(model.geometry(), rep.base_point());
    r.cusp = pos.cusp;
    r.cusp_log_height = pos.log_height;
    r.cartan_t = st.product.t();
    r.max_excursion = st.max_excursion;
    return r;
}

UnitTangent start_tangent(const CoverModel& model, StartMode mode, const GroupElement& fixed,
                          const std::optional<fuchsian::CuspNeighborhoods>& nbhd, random::Stream& rng) {
    if (mode == StartMode::Fixed) return UnitTangent(fixed);
    return fuchsian::haar_sample(model.geometry(), *nbhd, rng);
}

bool all_zero(const IntVec& v) {
    return std::all_of(v.begin(), v.end(), [](long long x) { return x == 0; });
}

}  // namespace

WalkResult run_walk(const CoverModel& model, const MeasureSpec& m, const WalkConfig& cfg) {
    if (cfg.steps < 0) throw Error(ErrorCode::InvalidArgument, "steps must be >= 0");
    if (cfg.trajectories < 1) throw Error(ErrorCode::InvalidArgument, "trajectories must be >= 1");
    std::vector<long long> checkpoints = cfg.checkpoints;
    if (checkpoints.empty()) checkpoints.push_back(cfg.steps);
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    if (checkpoints.front() < 0 || checkpoints.back() > cfg.steps)
        throw Error(ErrorCode::InvalidArgument, "checkpoints must lie in [0, steps]");

    std::optional<fuchsian::CuspNeighborhoods> nbhd;
    if (cfg.start == StartMode::Haar) nbhd = fuchsian::cusp_neighborhoods(model.geometry(), cfg.haar_log_height);

    WalkResult result;
    std::optional<cover::FiniteOrbit> orbit;
    if (cfg.use_orbit_chain && cfg.start == StartMode::Fixed && m.is_atomic()) {
        std::vector<GroupElement> atoms;
        for (const auto& a : m.atom_list()) atoms.push_back(a.element);
        orbit = cover::enumerate_orbit(model, model.lift(UnitTangent(cfg.start_rep)), atoms);
        result.orbit_chain = orbit.has_value();
        result.orbit_size = orbit ? orbit->states.size() : 0;
    }

    const auto K = static_cast<std::size_t>(cfg.trajectories);
    std::vector<std::vector<CheckpointRecord>> per_traj(K);
    std::vector<TrajectorySummary> summaries(K);
    const double r2 = cfg.return_radius;

    parallel_for(
        K,
        [&](std::size_t k) {
            const int traj = static_cast<int>(k);
            random::Stream rng(cfg.seed, k);
            TrajectorySummary& sum = summaries[k];
            sum.trajectory = traj;
            auto& out = per_traj[k];
            try {
                TrajectoryState st;
                st.point = model.lift(start_tangent(model, cfg.start, cfg.start_rep, nbhd, rng));
                st.start_index = st.point.index;
                st.start_base = st.point.rep.base_point();
                IntVec sigma(st.start_index.size(), 0);
                int state = 0;
                bool away = false;
                std::size_t ci = 0;
                auto current_rep = [&]() -> const UnitTangent& {
                    return orbit ? orbit->states[static_cast<std::size_t>(state)].rep : st.point.rep;
                };
                if (checkpoints[ci] == 0) {
                    out.push_back(make_record(model, traj, 0, 0.0, sigma, current_rep(), st));
                    ++ci;
                }
                for (long long n = 1; n <= cfg.steps; ++n) {
                    GroupElement g;
                    if (orbit) {
                        const std::size_t a = m.sample_atom(rng);
                        g = m.atom_list()[a].element;
                        const IntVec& delta = orbit->delta[static_cast<std::size_t>(state)][a];
                        for (std::size_t j = 0; j < sigma.size(); ++j) sigma[j] += delta[j];
                        state = orbit->next[static_cast<std::size_t>(state)][a];
                    } else {
                        g = m.sample(rng);
                        model.step(st.point, g);
                        for (std::size_t j = 0; j < sigma.size(); ++j) sigma[j] = st.point.index[j] - st.start_index[j];
                    }
                    st.product.multiply(g);
                    sum.steps_done = n;
                    // A return is a re-entry into the start neighborhood after leaving it.
                    const bool zero = all_zero(sigma);
                    const bool near = zero && hyp2::distance(current_rep().base_point(), st.start_base) <= r2;
                    if (!zero) st.max_excursion = std::max(st.max_excursion, cover::norm(sigma));
                    if (!near) {
                        away = true;
                    } else if (away) {
                        away = false;
                        ++sum.return_count;
                        if (sum.first_return < 0) sum.first_return = n;
                    }
                    if (ci < checkpoints.size() && checkpoints[ci] == n) {
                        out.push_back(make_record(model, traj, n, static_cast<double>(n), sigma, current_rep(), st));
                        ++ci;
                    }
                }
            } catch (const Error& e) {
                sum.ok = false;
                sum.error = e.what();
            }
        },
        cfg.threads);

    for (std::size_t k = 0; k < K; ++k)
        result.records.insert(result.records.end(), per_traj[k].begin(), per_traj[k].end());
    result.summaries = std::move(summaries);
    return result;
}

WalkResult run_geodesic(const CoverModel& model, const GeodesicConfig& cfg) {
    if (!(cfg.dt > 0.0) || cfg.dt > 0.5) throw Error(ErrorCode::InvalidArgument, "geodesic step dt must lie in (0, 0.5]");
    if (!(cfg.T >= 0.0)) throw Error(ErrorCode::InvalidArgument, "flow time T must be >= 0");
    if (cfg.trajectories < 1) throw Error(ErrorCode::InvalidArgument, "trajectories must be >= 1");
    std::vector<double> checkpoints = cfg.checkpoints;
    if (checkpoints.empty()) checkpoints.push_back(cfg.T);
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    if (checkpoints.front() < 0.0 || checkpoints.back() > cfg.T)
        throw Error(ErrorCode::InvalidArgument, "checkpoint times must lie in [0, T]");

    std::optional<fuchsian::CuspNeighborhoods> nbhd;
    if (cfg.start == StartMode::Haar) nbhd = fuchsian::cusp_neighborhoods(model.geometry(), cfg.haar_log_height);
    const GroupElement full = hyp2::translation(cfg.dt);

    const auto K = static_cast<std::size_t>(cfg.trajectories);
    std::vector<std::vector<CheckpointRecord>> per_traj(K);
    std::vector<TrajectorySummary> summaries(K);
    parallel_for(
        K,
        [&](std::size_t k) {
            const int traj = static_cast<int>(k);
            random::Stream rng(cfg.seed, k);
            TrajectorySummary& sum = summaries[k];
            sum.trajectory = traj;
            try {
                TrajectoryState st;
                st.point = model.lift(start_tangent(model, cfg.start, cfg.start_rep, nbhd, rng));
                st.start_index = st.point.index;
                IntVec sigma(st.start_index.size(), 0);
                double now = 0.0;
                long long n = 0;
                auto advance = [&](const GroupElement& g) {
                    model.step(st.point, g);
                    st.product.multiply(g);
                    ++n;
                    for (std::size_t j = 0; j < sigma.size(); ++j) sigma[j] = st.point.index[j] - st.start_index[j];
                    st.max_excursion = std::max(st.max_excursion, cover::norm(sigma));
                };
                for (double target : checkpoints) {
                    const auto whole = static_cast<long long>(std::floor((target - now) / cfg.dt + 1e-9));
                    for (long long s = 0; s < whole; ++s) advance(full);
                    const double rest = target - now - static_cast<double>(whole) * cfg.dt;
                    if (rest > 1e-12) advance(hyp2::translation(rest));
                    now = target;
                    sum.steps_done = n;
                    per_traj[k].push_back(make_record(model, traj, n, target, sigma, st.point.rep, st));
                }
            } catch (const Error& e) {
                sum.ok = false;
                sum.error = e.what();
            }
        },
        cfg.threads);

    WalkResult result;
    for (std::size_t k = 0; k < K; ++k)
        result.records.insert(result.records.end(), per_traj[k].begin(), per_traj[k].end());
    result.summaries = std::move(summaries);
    return result;
}

LyapunovEstimate lyapunov_estimate(const MeasureSpec& m, long long steps, int trajectories, std::uint64_t seed,
                                   bool override_check, int threads) {
    if (steps < 1 || trajectories < 1) throw Error(ErrorCode::InvalidArgument, "steps and trajectories must be >= 1");
    if (!override_check) {
        const auto z = zariski_density_check(m, seed);
        if (!z.pass) throw Error(ErrorCode::InvalidArgument, "Zariski density check failed: " + z.reason);
    }
    LyapunovEstimate est;
    est.per_trajectory.assign(static_cast<std::size_t>(trajectories), 0.0);
    parallel_for(
        static_cast<std::size_t>(trajectories),
        [&](std::size_t k) {
            random::Stream rng(seed, k);
            RunningProduct p;
            for (long long n = 0; n < steps; ++n) p.multiply(m.sample(rng));
            est.per_trajectory[k] = p.t() / static_cast<double>(steps);
        },
        threads);
    double mean = 0.0;
    for (double v : est.per_trajectory) mean += v;
    mean /= trajectories;
    double var = 0.0;
    for (double v : est.per_trajectory) var += (v - mean) * (v - mean);
    est.lambda = mean;
    est.standard_error = trajectories > 1 ? std::sqrt(var / (trajectories - 1) / trajectories) : 0.0;
    est.positive = mean > 0.0;
    return est;
}

}  // namespace covwalk::walk
