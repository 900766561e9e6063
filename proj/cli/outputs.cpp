#include "outputs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <unistd.h>

#include "covwalk/error.hpp"

#ifndef COVWALK_BUILD_ID
#define COVWALK_BUILD_ID "unknown"
#endif

namespace covwalk::cli {

namespace fs = std::filesystem;

std::string build_id() { return COVWALK_BUILD_ID; }

void write_atomic(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out << bytes;
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error(ErrorCode::IoError, "cannot rename into " + path.string() + ": " + ec.message());
    }
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

std::string records_csv(const std::vector<walk::CheckpointRecord>& records, int d) {
    std::ostringstream o;
    o << "traj,n";
    for (int k = 1; k <= d; ++k) o << ",k" << k;
    for (int k = 1; k <= d; ++k) o << ",drift" << k;
    o << ",cusp_height,cartan_t\n";
    for (const auto& r : records) {
        o << r.trajectory << ',' << r.n;
        for (auto s : r.sigma) o << ',' << s;
        for (double x : r.drift) o << ',' << fmt(x);
        o << ',' << fmt(std::exp(r.cusp_log_height)) << ',' << fmt(r.cartan_t) << '\n';
    }
    return o.str();
}

std::string records_jsonl(const std::vector<walk::CheckpointRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        json j{{"traj", r.trajectory},
               {"n", r.n},
               {"time", number(r.time)},
               {"sigma", r.sigma},
               {"drift", numbers(r.drift)},
               {"cusp", r.cusp},
               {"cusp_log_height", number(r.cusp_log_height)},
               {"cartan_t", number(r.cartan_t)},
               {"max_excursion", number(r.max_excursion)}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::string trajectories_csv(const std::vector<walk::TrajectorySummary>& summaries) {
    std::ostringstream o;
    o << "traj,ok,steps_done,first_return,return_count,error\n";
    for (const auto& s : summaries) {
        std::string err = s.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        o << s.trajectory << ',' << (s.ok ? 1 : 0) << ',' << s.steps_done << ',' << s.first_return << ','
          << s.return_count << ',' << err << '\n';
    }
    return o.str();
}

std::vector<walk::CheckpointRecord> terminal_records(const std::vector<walk::CheckpointRecord>& records) {
    std::vector<walk::CheckpointRecord> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i + 1 == records.size() || records[i + 1].trajectory != records[i].trajectory) out.push_back(records[i]);
    }
    return out;
}

json lattice_json(const cover::CoverModel& model) {
    const auto& g = model.geometry();
    const auto& spec = model.spec();
    const int chi = g.presentation.euler_characteristic();
    json gens = json::array();
    for (const auto& gen : g.presentation.generators()) gens.push_back(gen.label);
    json cusps = json::array();
    for (std::size_t j = 0; j < g.cusps.size(); ++j) {
        const auto& c = g.cusps[j];
        cusps.push_back({{"fixed_point", c.fixed_point.infinite ? json("inf") : json(c.fixed_point.x)},
                         {"width", c.width},
                         {"word", g.presentation.format(c.primitive_parabolic)},
                         {"v", j < spec.v.size() ? json(spec.v[j]) : json::array()},
                         {"unfolded", j < spec.unfolded.size() && spec.unfolded[j]}});
    }
    return {{"name", g.name},
            {"generators", gens},
            {"euler_characteristic", chi},
            {"area", g.polygon.area},
            {"expected_area", 2.0 * std::numbers::pi * std::abs(chi)},
            {"sides", g.polygon.sides.size()},
            {"cusps", cusps},
            {"d", spec.d},
            {"ec_dim", spec.ec_dim()},
            {"ec_basis", spec.ec_basis}};
}

std::optional<std::vector<double>> explicit_target(const config::Bundle& b) {
    if (b.config.target == "auto") return std::nullopt;
    std::vector<double> t;
    std::istringstream in(b.config.target);
    for (double x; in >> x;) t.push_back(x);
    if (static_cast<int>(t.size()) != b.model.d()) {
        throw Error(ErrorCode::ConfigError, "analysis target has " + std::to_string(t.size()) + " components, the cover has d = " +
                                                std::to_string(b.model.d()));
    }
    return t;
}

namespace {

std::vector<double> component(const std::vector<walk::CheckpointRecord>& recs, int k, bool sqrt_scaled) {
    std::vector<double> out;
    out.reserve(recs.size());
    for (const auto& r : recs) {
        if (sqrt_scaled) out.push_back(r.time > 0.0 ? static_cast<double>(r.sigma[k]) / std::sqrt(r.time) : 0.0);
        else out.push_back(r.drift[k]);
    }
    return out;
}

std::string ecdf_dat(std::vector<double> x, const std::function<double(double)>& cdf, const std::string& title) {
    std::sort(x.begin(), x.end());
    std::ostringstream o;
    o << "# " << title << "\n# columns: value empirical_cdf fitted_cdf\n";
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) o << fmt(x[i]) << ' ' << fmt((i + 1) / n) << ' ' << fmt(cdf(x[i])) << '\n';
    return o.str();
}

std::string drift_dat(const std::vector<walk::CheckpointRecord>& records, int d) {
    std::map<long long, std::vector<const walk::CheckpointRecord*>> by_n;
    for (const auto& r : records) by_n[r.n].push_back(&r);
    std::ostringstream o;
    o << "# drift quantiles over trajectories per checkpoint\n# columns: n";
    for (int k = 1; k <= d; ++k) o << " median" << k << " q25_" << k << " q75_" << k;
    o << '\n';
    for (const auto& [n, rs] : by_n) {
        o << n;
        for (int k = 0; k < d; ++k) {
            std::vector<double> v;
            for (const auto* r : rs) v.push_back(r->drift[k]);
            std::sort(v.begin(), v.end());
            o << ' ' << fmt(stats::quantile_sorted(v, 0.5)) << ' ' << fmt(stats::quantile_sorted(v, 0.25)) << ' '
              << fmt(stats::quantile_sorted(v, 0.75));
        }
        o << '\n';
    }
    return o.str();
}

template <class F>
json guarded(AnalysisOutput& out, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        out.failed = true;
        return json{{"error", e.what()}, {"code", std::string(to_string(e.code()))}};
    }
}

}  // namespace

AnalysisOutput analyze(const config::Bundle& b, const walk::WalkResult& result, RunKind kind) {
    AnalysisOutput out;
    const int d = b.model.d();
    const auto& spec = b.model.spec();
    const auto target = explicit_target(b);

    std::set<int> good;
    for (const auto& s : result.summaries)
        if (s.ok) good.insert(s.trajectory);
    std::vector<walk::CheckpointRecord> records;
    for (const auto& r : result.records)
        if (good.count(r.trajectory)) records.push_back(r);
    const auto terminal = terminal_records(records);
    const long long steps = kind == RunKind::Walk ? b.walk.steps : 0;

    std::vector<std::string> reports = b.config.reports;
    if (reports.empty()) reports = {"drift"};
    auto walk_only = [&](const std::string& name) {
        if (kind == RunKind::Walk) return false;
        out.reports[name] = {{"error", "report '" + name + "' applies to walk runs only"}};
        return true;
    };

    for (const auto& name : reports) {
        if (name == "drift") {
            out.reports["drift"] = guarded(out, [&] {
                std::optional<std::vector<double>> t = target;
                std::string source = t ? "config" : "none";
                if (!t && kind == RunKind::Walk && result.orbit_chain) {
                    std::vector<hyp2::GroupElement> atoms;
                    for (const auto& a : b.measure.atom_list()) atoms.push_back(a.element);
                    const auto orbit = cover::enumerate_orbit(b.model, b.model.lift(hyp2::UnitTangent(b.walk.start_rep)), atoms);
                    if (orbit) {
                        t = stats::orbit_drift(*orbit, b.measure);
                        source = "orbit";
                    }
                }
                const auto s = stats::drift_summary(records, t, b.config.tolerance);
                out.dat.emplace_back("drift.dat", drift_dat(records, d));
                json j{{"trajectories", s.terminal.size()},
                       {"mean", numbers(s.mean)},
                       {"covariance", s.covariance},
                       {"target_source", source},
                       {"tolerance", b.config.tolerance}};
                if (s.target) {
                    j["target"] = numbers(*s.target);
                    j["fraction_within"] = s.fraction_within;
                }
                return j;
            });
        } else if (name == "cauchy" || name == "gaussian") {
            const bool cauchy = name == "cauchy";
            out.reports[name] = guarded(out, [&] {
                json comps = json::array();
                for (int k = 0; k < d; ++k) {
                    const auto x = component(terminal, k, !cauchy);
                    const std::string file = name + "_" + std::to_string(k + 1) + ".dat";
                    if (cauchy) {
                        const auto f = stats::cauchy_fit(x);
                        comps.push_back({{"component", k + 1},
                                         {"statistic", "sigma/time"},
                                         {"location", f.location},
                                         {"scale", f.scale},
                                         {"ks_distance", f.ks_distance},
                                         {"tail_index", f.tail_index},
                                         {"n", f.n}});
                        out.dat.emplace_back(file, ecdf_dat(x, [f](double v) { return stats::cauchy_cdf(v, f.location, f.scale); },
                                                            "terminal sigma/time, component " + std::to_string(k + 1)));
                    } else {
                        const auto f = stats::gaussian_fit(x);
                        comps.push_back({{"component", k + 1},
                                         {"statistic", "sigma/sqrt(time)"},
                                         {"mean", f.mean},
                                         {"sd", f.sd},
                                         {"standard_error", f.standard_error},
                                         {"ks_distance", f.ks_distance},
                                         {"tail_index", f.tail_index},
                                         {"n", f.n}});
                        out.dat.emplace_back(file, ecdf_dat(x, [f](double v) { return stats::normal_cdf(v, f.mean, f.sd); },
                                                            "terminal sigma/sqrt(time), component " + std::to_string(k + 1)));
                    }
                }
                return json{{"components", comps}};
            });
        } else if (name == "accumulation") {
            if (walk_only(name)) continue;
            out.reports[name] = guarded(out, [&] {
                double ec_thr = 0.0, ec_scale = 0.0;
                if (spec.ec_dim() > 0) {
                    std::vector<double> proj;
                    for (const auto& r : terminal) {
                        double p = 0.0;
                        for (int k = 0; k < d; ++k) p += r.drift[k] * spec.ec_orthonormal[0][k];
                        proj.push_back(p);
                    }
                    ec_scale = stats::cauchy_fit(proj).scale;
                    ec_thr = b.config.ec_threshold_factor * ec_scale;
                }
                const long long n0 = b.config.accumulation_n0 > 0 ? b.config.accumulation_n0 : std::max(1LL, steps / 100);
                const auto rep = stats::accumulation_diagnostic(records, spec, n0, steps, ec_thr, b.config.complement_threshold);
                std::ostringstream dat;
                dat << "# normalized drift ranges over n in [" << n0 << ", " << steps << "]\n# columns: traj ec_range complement_range total_range\n";
                for (std::size_t i = 0; i < rep.total_range.size(); ++i) {
                    dat << i << ' ' << fmt(i < rep.ec_range.size() ? rep.ec_range[i] : 0.0) << ' '
                        << fmt(i < rep.complement_range.size() ? rep.complement_range[i] : 0.0) << ' ' << fmt(rep.total_range[i]) << '\n';
                }
                out.dat.emplace_back("accumulation.dat", dat.str());
                std::vector<double> total = rep.total_range;
                std::sort(total.begin(), total.end());
                return json{{"n0", rep.n0},
                            {"n_max", rep.n_max},
                            {"ec_dim", spec.ec_dim()},
                            {"ec_cauchy_scale", ec_scale},
                            {"ec_threshold", rep.ec_threshold},
                            {"complement_threshold", rep.complement_threshold},
                            {"fraction_ec_exceeds", rep.fraction_ec_exceeds},
                            {"fraction_complement_below", rep.fraction_complement_below},
                            {"fraction_separated", rep.fraction_separated},
                            {"total_range_q95", total.empty() ? json(nullptr) : json(stats::quantile_sorted(total, 0.95))}};
            });
        } else if (name == "recurrence") {
            if (walk_only(name)) continue;
            out.reports[name] = guarded(out, [&] {
                std::set<long long> have;
                for (const auto& r : result.records) have.insert(r.n);
                std::vector<long long> grid;
                for (long long n = 10; n <= steps; n *= 10)
                    if (have.count(n)) grid.push_back(n);
                if (grid.empty() || grid.back() != steps) grid.push_back(steps);
                json rows = json::array();
                std::ostringstream dat;
                dat << "# statistical recurrence report\n# columns: n return_fraction median_first_return median_max_excursion\n";
                std::string hint;
                for (long long n : grid) {
                    const auto rep = stats::recurrence_report(result, spec, n);
                    hint = rep.verdict_hint;
                    rows.push_back({{"n", n},
                                    {"return_fraction", rep.return_fraction},
                                    {"median_first_return", rep.median_first_return},
                                    {"median_max_excursion", rep.median_max_excursion}});
                    dat << n << ' ' << fmt(rep.return_fraction) << ' ' << fmt(rep.median_first_return) << ' '
                        << fmt(rep.median_max_excursion) << '\n';
                }
                out.dat.emplace_back("recurrence.dat", dat.str());
                return json{{"grid", rows},
                            {"return_radius", b.walk.return_radius},
                            {"verdict_hint", hint},
                            {"note", "statistical surrogate from finite data"}};
            });
        } else if (name == "lyapunov") {
            if (walk_only(name)) continue;
            out.reports[name] = guarded(out, [&] {
                const auto est = walk::lyapunov_estimate(b.measure, b.config.lyapunov_steps, b.config.lyapunov_trajectories, b.config.seed);
                return json{{"lambda", est.lambda},
                            {"standard_error", est.standard_error},
                            {"positive", est.positive},
                            {"steps", b.config.lyapunov_steps},
                            {"trajectories", b.config.lyapunov_trajectories}};
            });
        }
    }
    return out;
}

json summary_json(const config::Bundle& b, const std::string& command, const walk::WalkResult& result,
                  const AnalysisOutput& analysis, double elapsed_seconds) {
    const auto canon = config::canonical(b.config);
    std::string weights;
    for (const auto& row : b.model.spec().weights) {
        weights += weights.empty() ? "" : ";";
        for (std::size_t k = 0; k < row.size(); ++k) weights += (k ? "," : "") + std::to_string(row[k]);
    }
    json errors = json::array();
    int failed = 0;
    for (const auto& s : result.summaries) {
        if (s.ok) continue;
        ++failed;
        if (errors.size() < 10) errors.push_back({{"traj", s.trajectory}, {"error", s.error}});
    }
    json run{{"trajectories", result.summaries.size()},
             {"seed", b.config.seed},
             {"orbit_chain", result.orbit_chain},
             {"orbit_size", result.orbit_size},
             {"failed_trajectories", failed},
             {"errors", errors},
             {"elapsed_seconds", elapsed_seconds}};
    if (command == "geodesic run") {
        run["T"] = b.geodesic.T;
        run["dt"] = b.geodesic.dt;
        run["start"] = b.config.geodesic_start;
    } else {
        run["steps"] = b.walk.steps;
        run["start"] = b.config.start;
        run["measure"] = b.config.measure;
    }
    json j{{"schema", "covwalk-summary/1"},
           {"command", command},
           {"build", build_id()},
           {"config_hash", config::hex64(config::fnv1a64(canon))},
           {"config", canon},
           {"cover_key", b.model.geometry().name + "|" + weights},
           {"lattice", lattice_json(b.model)},
           {"run", run},
           {"reports", analysis.reports}};
    if (!b.lattice_text.empty()) j["lattice_hash"] = config::hex64(config::fnv1a64(b.lattice_text));
    return j;
}

}  // namespace covwalk::cli
