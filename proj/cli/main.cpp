// covwalk: experiment runner. Exit codes: 0 success, 2 configuration or
// input errors, 3 runtime failures (reduction, degenerate samples).

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "covwalk/config.hpp"
#include "covwalk/error.hpp"
#include "covwalk/parallel.hpp"
#include "outputs.hpp"

namespace fs = std::filesystem;
using namespace covwalk;
using covwalk::cli::json;

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kRuntime = 3;

// Errors before a run starts are the caller's input; errors after are the run's.
struct SetupError {
    Error error;
};

template <class F>
auto setup(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw SetupError{e};
    }
}

std::string vec_str(const std::vector<long long>& v) {
    std::string s = "(";
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + std::to_string(v[k]);
    return s + ")";
}

// ---------------------------------------------------------------------------
// lattice check

struct LatticeInput {
    fuchsian::SurfaceGeometry geom;
    std::vector<config::WeightRow> weights;
};

LatticeInput load_lattice_input(const std::string& what) {
    const auto names = fuchsian::builtin_names();
    if (std::find(names.begin(), names.end(), what) != names.end()) {
        LatticeInput in{fuchsian::builtin_lattice(what), {}};
        // the default cover of each preset: the first generator of gamma2, the second of the torus
        const bool torus = what == "punctured_square_torus";
        const auto& gens = in.geom.presentation.generators();
        for (std::size_t g = 0; g < gens.size(); ++g)
            in.weights.push_back({gens[g].label, {(torus ? g == 1 : g == 0) ? 1LL : 0LL}, 0});
        return in;
    }
    if (!fs::exists(what)) throw Error(ErrorCode::ConfigError, "'" + what + "' is neither a preset nor a readable file");
    auto file = config::load_lattice(what);
    return {config::lattice_geometry(file), file.weights};
}

std::vector<config::WeightRow> parse_weight_options(const std::vector<std::string>& opts) {
    std::vector<config::WeightRow> rows;
    for (const auto& o : opts) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--weight expects LABEL=k1,...,kd, got '" + o + "'");
        config::WeightRow row;
        row.label = o.substr(0, eq);
        std::string rest = o.substr(eq + 1);
        std::replace(rest.begin(), rest.end(), ',', ' ');
        std::istringstream in(rest);
        std::string tok;
        while (in >> tok) {
            try {
                std::size_t used = 0;
                row.row.push_back(std::stoll(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw Error(ErrorCode::ConfigError, "bad weight entry '" + tok + "' in '" + o + "'");
            }
        }
        if (row.row.empty()) throw Error(ErrorCode::ConfigError, "empty weight row in '" + o + "'");
        rows.push_back(std::move(row));
    }
    return rows;
}

// d = 1 covers with weights in [-2, 2]^rank that kill the relators and are onto Z.
std::vector<std::vector<cover::IntVec>> phi_sweep(const fuchsian::LatticePresentation& pres) {
    std::vector<std::vector<cover::IntVec>> out;
    const std::size_t r = pres.rank();
    if (r > 6) return out;
    std::vector<long long> w(r, -2);
    for (;;) {
        long long g = 0;
        for (auto x : w) g = std::gcd(g, x);
        if (g == 1) {
            std::vector<cover::IntVec> rows;
            for (auto x : w) rows.push_back({x});
            bool killed = true;
            cover::CoverSpec probe;
            probe.d = 1;
            probe.weights = rows;
            for (const auto& rel : pres.relators()) killed = killed && cover::phi(probe, rel)[0] == 0;
            if (killed) out.push_back(std::move(rows));
        }
        std::size_t k = 0;
        while (k < r && w[k] == 2) w[k++] = -2;
        if (k == r) break;
        ++w[k];
    }
    return out;
}

int cmd_lattice_check(const std::string& what, const std::vector<std::string>& weight_opts) {
    LatticeInput in;
    try {
        in = load_lattice_input(what);
    } catch (const Error& e) {
        std::cerr << "lattice check: " << e.what() << "\n";
        return kConfig;
    }
    const auto& g = in.geom;
    const auto& pres = g.presentation;
    bool ok = true;

    std::cout << "lattice " << g.name << "\n";
    std::cout << "  generators:";
    for (const auto& gen : pres.generators()) {
        const auto cls = hyp2::classify(gen.element);
        std::cout << " " << gen.label << " (" << hyp2::to_string(cls.kind) << ", trace " << gen.element.trace() << ")";
    }
    std::cout << "\n  relators: " << pres.relators().size();
    for (std::size_t k = 0; k < pres.relators().size(); ++k) {
        const double res = hyp2::psl_distance(pres.evaluate(pres.relators()[k]), hyp2::identity());
        std::cout << "\n    " << pres.format(pres.relators()[k]) << "  residual " << std::scientific << std::setprecision(2) << res
                  << std::defaultfloat;
        if (!(res <= 1e-9)) ok = false;
    }
    const int chi = pres.euler_characteristic();
    const double expected = 2.0 * std::numbers::pi * std::abs(chi);
    const double diff = std::abs(g.polygon.area - expected);
    const bool area_ok = diff <= 1e-6;
    ok = ok && area_ok;
    std::cout << "\n  euler characteristic " << chi << "\n  polygon: " << g.polygon.sides.size() << " sides, "
              << g.polygon.ideal_vertex_count() << " ideal vertices, area " << std::setprecision(12) << g.polygon.area
              << " vs 2 pi |chi| = " << expected << std::setprecision(6) << " (diff " << diff << ") "
              << (area_ok ? "ok" : "FAIL") << "\n";

    std::vector<config::WeightRow> rows = weight_opts.empty() ? in.weights : parse_weight_options(weight_opts);
    std::optional<cover::CoverSpec> spec;
    if (!rows.empty()) {
        try {
            auto w = config::weight_matrix(pres, rows);
            const int d = static_cast<int>(w.front().size());
            spec = cover::validate_cover(pres, g.cusps, d, std::move(w));
        } catch (const Error& e) {
            std::cout << "  cover: " << e.what() << "\n";
            std::cerr << "lattice check: " << e.what() << "\n";
            return kConfig;
        }
    }

    std::cout << "  cusps: " << g.cusps.size() << "\n";
    for (std::size_t j = 0; j < g.cusps.size(); ++j) {
        const auto& c = g.cusps[j];
        std::cout << "    " << j << "  fixed point " << (c.fixed_point.infinite ? std::string("inf") : std::to_string(c.fixed_point.x))
                  << "  width " << c.width << "  word " << pres.format(c.primitive_parabolic);
        if (spec) std::cout << "  v = " << vec_str(spec->v[j]) << "  unfolded " << (spec->unfolded[j] ? "yes" : "no");
        std::cout << "\n";
    }
    if (spec) {
        std::cout << "  cover: d = " << spec->d << ", weights";
        for (std::size_t k = 0; k < pres.rank(); ++k) std::cout << " " << pres.generators()[k].label << "=" << vec_str(spec->weights[k]);
        std::cout << ", dim E_C = " << spec->ec_dim() << "\n";
    }

    const auto sweep = phi_sweep(pres);
    if (!sweep.empty()) {
        std::vector<int> unfolded(g.cusps.size(), 0);
        for (const auto& w : sweep) {
            const auto s = cover::validate_cover(pres, g.cusps, 1, w);
            for (std::size_t j = 0; j < g.cusps.size(); ++j) unfolded[j] += s.unfolded[j];
        }
        std::cout << "  phi sweep: " << sweep.size() << " surjective d = 1 weight rows in [-2, 2]^" << pres.rank() << "\n";
        for (std::size_t j = 0; j < g.cusps.size(); ++j)
            std::cout << "    cusp " << j << " unfolded for " << unfolded[j] << " of " << sweep.size() << "\n";
    }
    std::cout << "result: " << (ok ? "ok" : "FAIL") << "\n";
    return ok ? kOk : kConfig;
}

// ---------------------------------------------------------------------------
// runs

struct RunOptions {
    std::string config;
    std::string out;
};

fs::path out_dir(const RunOptions& o) {
    if (!o.out.empty()) return o.out;
    return fs::path("runs") / fs::path(o.config).stem();
}

config::Bundle load_bundle(const std::string& path) {
    return setup([&] {
        worker_count();
        auto b = config::make_bundle(config::load_config(path));
        cli::explicit_target(b);
        return b;
    });
}

void write_outputs(const fs::path& dir, const config::Bundle& b, const std::string& command, const walk::WalkResult& res,
                   const cli::AnalysisOutput& analysis, double elapsed) {
    cli::write_atomic(dir / "records.csv", cli::records_csv(res.records, b.model.d()));
    cli::write_atomic(dir / "records.jsonl", cli::records_jsonl(res.records));
    cli::write_atomic(dir / "trajectories.csv", cli::trajectories_csv(res.summaries));
    for (const auto& [name, text] : analysis.dat) cli::write_atomic(dir / name, text);
    cli::write_atomic(dir / "summary.json", cli::summary_json(b, command, res, analysis, elapsed).dump(2) + "\n");
}

void print_reports(const json& reports) {
    for (const auto& [name, r] : reports.items()) {
        if (r.contains("error")) {
            std::cout << "  " << name << ": " << r["error"].get<std::string>() << "\n";
            continue;
        }
        if (name == "drift") {
            std::cout << "  drift: mean " << r["mean"].dump();
            if (r.contains("target"))
                std::cout << ", target " << r["target"].dump() << " (" << r["target_source"].get<std::string>() << "), within "
                          << r["tolerance"].get<double>() << ": " << r["fraction_within"].get<double>();
            std::cout << "\n";
        } else if (name == "cauchy" || name == "gaussian") {
            for (const auto& c : r["components"]) {
                std::cout << "  " << name << "[" << c["component"].get<int>() << "]: ";
                if (name == "cauchy") std::cout << "location " << c["location"].get<double>() << " scale " << c["scale"].get<double>();
                else std::cout << "mean " << c["mean"].get<double>() << " sd " << c["sd"].get<double>();
                std::cout << " ks " << c["ks_distance"].get<double>() << " tail index " << c["tail_index"].get<double>() << "\n";
            }
        } else if (name == "accumulation") {
            std::cout << "  accumulation: E_C range > " << r["ec_threshold"].get<double>() << " for "
                      << r["fraction_ec_exceeds"].get<double>() << ", complement range < " << r["complement_threshold"].get<double>()
                      << " for " << r["fraction_complement_below"].get<double>() << ", total range q95 " << r["total_range_q95"].dump()
                      << "\n";
        } else if (name == "recurrence") {
            std::cout << "  recurrence (" << r["verdict_hint"].get<std::string>() << " expected):\n";
            for (const auto& row : r["grid"])
                std::cout << "    n " << row["n"].get<long long>() << "  return fraction " << row["return_fraction"].get<double>()
                          << "  median max excursion " << row["median_max_excursion"].get<double>() << "\n";
        } else if (name == "lyapunov") {
            std::cout << "  lyapunov: " << r["lambda"].get<double>() << " +- " << r["standard_error"].get<double>() << "\n";
        }
    }
}

int finish_run(const RunOptions& o, const config::Bundle& b, const std::string& command, const walk::WalkResult& res,
               cli::RunKind kind, double run_seconds) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto analysis = cli::analyze(b, res, kind);
    const double elapsed = run_seconds + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto dir = out_dir(o);
    write_outputs(dir, b, command, res, analysis, elapsed);

    int failed = 0;
    for (const auto& s : res.summaries) failed += !s.ok;
    std::cout << command << ": " << res.summaries.size() << " trajectories";
    if (res.orbit_chain) std::cout << " (exact orbit chain, " << res.orbit_size << " states)";
    std::cout << ", " << failed << " failed, " << std::setprecision(3) << elapsed << " s\n" << std::setprecision(6);
    print_reports(analysis.reports);
    std::cout << "outputs: " << dir.string() << "\n";
    if (failed) {
        for (const auto& s : res.summaries)
            if (!s.ok) {
                std::cerr << command << ": trajectory " << s.trajectory << ": " << s.error << "\n";
                break;
            }
    }
    return failed || analysis.failed ? kRuntime : kOk;
}

int cmd_walk(const RunOptions& o, bool force_recurrence) {
    auto b = load_bundle(o.config);
    if (force_recurrence) {
        auto& r = b.config.reports;
        if (std::find(r.begin(), r.end(), "recurrence") == r.end()) r.push_back("recurrence");
        std::sort(r.begin(), r.end());
        if (b.config.checkpoints_per_decade == 0) {
            b.config.checkpoints_per_decade = 1;
            b.walk.checkpoints = walk::make_checkpoints(b.walk.steps, b.config.checkpoint_stride, 1);
        }
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = walk::run_walk(b.model, b.measure, b.walk);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return finish_run(o, b, force_recurrence ? "recurrence" : "walk run", res, cli::RunKind::Walk, secs);
}

int cmd_geodesic(const RunOptions& o) {
    const auto b = load_bundle(o.config);
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = walk::run_geodesic(b.model, b.geodesic);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return finish_run(o, b, "geodesic run", res, cli::RunKind::Geodesic, secs);
}

struct LyapunovOptions {
    std::string config;
    long long steps = 0;
    int trajectories = 0;
    bool override_check = false;
};

int cmd_lyapunov(const LyapunovOptions& o) {
    const auto b = load_bundle(o.config);
    const long long n = o.steps > 0 ? o.steps : b.config.lyapunov_steps;
    const int k = o.trajectories > 0 ? o.trajectories : b.config.lyapunov_trajectories;
    const auto z = walk::zariski_density_check(b.measure, b.config.seed);
    std::cout << "zariski density check: " << (z.pass ? "pass" : "fail") << (z.reason.empty() ? "" : " (" + z.reason + ")") << "\n";
    if (!z.pass && !o.override_check) {
        std::cerr << "lyapunov: the measure fails the Zariski density check; pass --override-zariski to estimate anyway\n";
        return kConfig;
    }
    const auto est = walk::lyapunov_estimate(b.measure, n, k, b.config.seed, o.override_check);
    std::cout << std::setprecision(6) << "lambda " << est.lambda << "  se " << est.standard_error << "  (" << k << " trajectories, "
              << n << " steps)  " << (est.positive ? "positive" : "not positive") << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// fit

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_number(const std::string& s, double& v) {
    try {
        std::size_t used = 0;
        v = std::stod(s, &used);
        return used == s.size() || s.find_first_not_of(" \t\r", used) == std::string::npos;
    } catch (const std::exception&) {
        return false;
    }
}

// Samples for `fit`: terminal records of a walk/geodesic output (CSV or
// JSONL), or a plain one-column list.
std::vector<double> read_samples(const fs::path& path, int comp, bool sqrt_scaled) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + path.string());
    std::vector<double> out;
    const int k = comp - 1;

    if (path.extension() == ".jsonl") {
        std::map<int, json> last;
        std::string line;
        int ln = 0;
        while (std::getline(in, line)) {
            ++ln;
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const std::exception& e) {
                throw Error(ErrorCode::ConfigError, std::string("bad JSON record: ") + e.what(), ln);
            }
            last[j.at("traj").get<int>()] = j;
        }
        for (const auto& [traj, j] : last) {
            const auto& sigma = j.at("sigma");
            if (k >= static_cast<int>(sigma.size())) throw Error(ErrorCode::ConfigError, "component out of range");
            const double t = j.at("time").get<double>();
            if (sqrt_scaled) out.push_back(t > 0 ? sigma[k].get<double>() / std::sqrt(t) : 0.0);
            else out.push_back(j.at("drift")[k].is_null() ? 0.0 : j.at("drift")[k].get<double>());
        }
        return out;
    }

    std::string line;
    std::getline(in, line);
    const auto head = split_csv(line);
    if (head.size() >= 2 && head[0] == "traj" && head[1] == "n") {
        // record file: keep the last row per trajectory
        const auto kcol = std::find(head.begin(), head.end(), "k" + std::to_string(comp));
        const auto dcol = std::find(head.begin(), head.end(), "drift" + std::to_string(comp));
        if (kcol == head.end() || dcol == head.end()) throw Error(ErrorCode::ConfigError, "no component " + std::to_string(comp) + " in " + path.string());
        const auto ki = kcol - head.begin(), di = dcol - head.begin();
        std::map<long long, double> last;
        int ln = 1;
        while (std::getline(in, line)) {
            ++ln;
            if (line.empty()) continue;
            const auto cells = split_csv(line);
            double traj = 0, n = 0, kv = 0, dv = 0;
            if (cells.size() != head.size() || !parse_number(cells[0], traj) || !parse_number(cells[1], n) ||
                !parse_number(cells[ki], kv) || !parse_number(cells[di], dv))
                throw Error(ErrorCode::ConfigError, "malformed record row", ln);
            last[static_cast<long long>(traj)] = sqrt_scaled ? (n > 0 ? kv / std::sqrt(n) : 0.0) : dv;
        }
        for (const auto& [t, v] : last) out.push_back(v);
        return out;
    }

    // plain list: first column, an optional non-numeric header line
    int ln = 1;
    auto take = [&](const std::string& l, bool may_skip) {
        if (l.find_first_not_of(" \t\r") == std::string::npos) return;
        double v = 0;
        const auto cells = split_csv(l);
        if (parse_number(cells.empty() ? l : cells[0], v)) out.push_back(v);
        else if (!may_skip) throw Error(ErrorCode::ConfigError, "not a number: '" + l + "'", ln);
    };
    take(line, true);
    while (std::getline(in, line)) {
        ++ln;
        take(line, false);
    }
    return out;
}

int cmd_fit(const std::string& family, const std::string& file, int comp, const std::string& statistic) {
    if (statistic != "drift" && statistic != "sqrt") throw SetupError{Error(ErrorCode::ConfigError, "--statistic is 'drift' or 'sqrt'")};
    const auto samples = setup([&] { return read_samples(file, comp, statistic == "sqrt"); });
    std::cout << std::setprecision(6);
    if (family == "cauchy") {
        const auto f = stats::cauchy_fit(samples);
        const auto [mu, c] = stats::cauchy_mle(samples);
        std::cout << "cauchy fit: n " << f.n << "  location " << f.location << "  scale " << f.scale << "  ks " << f.ks_distance
                  << "  tail index " << f.tail_index << "\n  mle cross-check: location " << mu << "  scale " << c << "\n";
    } else {
        const auto f = stats::gaussian_fit(samples);
        std::cout << "gaussian fit: n " << f.n << "  mean " << f.mean << " +- " << f.standard_error << "  sd " << f.sd << "  ks "
                  << f.ks_distance << "  tail index " << f.tail_index << "\n";
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// report

std::string num(const json& j, int precision = 4) {
    if (!j.is_number()) return "-";
    std::ostringstream o;
    o << std::setprecision(precision) << j.get<double>();
    return o.str();
}

int cmd_report(const std::string& dir_arg) {
    const fs::path dir(dir_arg);
    if (!fs::is_directory(dir)) {
        std::cerr << "report: " << dir_arg << " is not a directory\n";
        return kConfig;
    }
    std::vector<std::pair<std::string, json>> runs;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().filename() != "summary.json") continue;
        std::ifstream in(entry.path());
        json j;
        try {
            j = json::parse(in);
        } catch (const std::exception& e) {
            std::cerr << "report: skipping " << entry.path().string() << ": " << e.what() << "\n";
            continue;
        }
        if (j.value("schema", "") != "covwalk-summary/1") continue;
        auto name = fs::relative(entry.path().parent_path(), dir).string();
        runs.emplace_back(name == "." ? dir.filename().string() : name, std::move(j));
    }
    if (runs.empty()) {
        std::cerr << "report: no summaries under " << dir_arg << "\n";
        return kConfig;
    }
    std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    std::ostringstream txt, drift_dat, fit_dat, rec_dat;
    txt << "covwalk dashboard: " << runs.size() << " run(s) under " << dir_arg << "\n";
    drift_dat << "# columns: run_index mean_drift1 fraction_within (nan when no target)\n";
    fit_dat << "# columns: run_index family component scale_or_sd ks_distance tail_index\n";
    rec_dat << "# one block per run (gnuplot index); columns: n return_fraction median_max_excursion\n";
    int idx = 0;
    for (const auto& [name, j] : runs) {
        const auto& lat = j["lattice"];
        const auto& run = j["run"];
        const auto& reps = j["reports"];
        txt << "\n[" << idx << "] " << name << "  (" << j.value("command", "?") << ", config " << j.value("config_hash", "?")
            << ", build " << j.value("build", "?") << ")\n";
        txt << "    lattice " << lat.value("name", "?") << ", d = " << lat.value("d", 0) << ", dim E_C = " << lat.value("ec_dim", 0)
            << ", cusps " << lat["cusps"].size() << "\n";
        txt << "    trajectories " << run.value("trajectories", 0) << ", failed " << run.value("failed_trajectories", 0);
        if (run.contains("steps")) txt << ", steps " << run["steps"].get<long long>();
        if (run.contains("T")) txt << ", T " << num(run["T"]);
        txt << "\n";
        for (const auto& [rname, r] : reps.items()) {
            if (r.contains("error")) {
                txt << "    " << rname << ": error: " << r["error"].get<std::string>() << "\n";
                continue;
            }
            if (rname == "drift") {
                txt << "    drift mean " << r["mean"].dump();
                if (r.contains("target")) txt << ", target " << r["target"].dump() << ", within tolerance: " << num(r["fraction_within"]);
                txt << "\n";
                drift_dat << idx << ' ' << num(r["mean"][0], 10) << ' ' << (r.contains("fraction_within") ? num(r["fraction_within"]) : "nan")
                          << "\n";
            } else if (rname == "cauchy" || rname == "gaussian") {
                for (const auto& c : r["components"]) {
                    const auto& spread = rname == "cauchy" ? c["scale"] : c["sd"];
                    txt << "    " << rname << "[" << c["component"].get<int>() << "] " << (rname == "cauchy" ? "scale " : "sd ")
                        << num(spread) << ", ks " << num(c["ks_distance"]) << ", tail index " << num(c["tail_index"]) << "\n";
                    fit_dat << idx << ' ' << rname << ' ' << c["component"].get<int>() << ' ' << num(spread, 10) << ' '
                            << num(c["ks_distance"], 10) << ' ' << num(c["tail_index"], 10) << "\n";
                }
            } else if (rname == "accumulation") {
                txt << "    accumulation: E_C exceeds " << num(r["fraction_ec_exceeds"]) << ", complement below "
                    << num(r["fraction_complement_below"]) << ", total range q95 " << num(r["total_range_q95"]) << "\n";
            } else if (rname == "recurrence") {
                txt << "    recurrence (" << r.value("verdict_hint", "?") << " expected):";
                rec_dat << "# " << name << "\n";
                for (const auto& row : r["grid"]) {
                    txt << " n=" << row["n"].get<long long>() << ":" << num(row["return_fraction"]);
                    rec_dat << row["n"].get<long long>() << ' ' << num(row["return_fraction"], 10) << ' '
                            << num(row["median_max_excursion"], 10) << "\n";
                }
                rec_dat << "\n\n";
                txt << "\n";
            } else if (rname == "lyapunov") {
                txt << "    lyapunov " << num(r["lambda"]) << " +- " << num(r["standard_error"]) << "\n";
            }
        }
        ++idx;
    }

    // walk scale against lambda * geodesic scale for runs on the same cover
    bool header = false;
    for (const auto& [wn, w] : runs) {
        const auto& wr = w["reports"];
        if (w.value("command", "") == "geodesic run" || !wr.contains("cauchy") || !wr.contains("lyapunov") ||
            wr["cauchy"].contains("error") || wr["lyapunov"].contains("error"))
            continue;
        for (const auto& [gn, g] : runs) {
            const auto& gr = g["reports"];
            if (g.value("command", "") != "geodesic run" || g["cover_key"] != w["cover_key"] || !gr.contains("cauchy") ||
                gr["cauchy"].contains("error"))
                continue;
            if (!header) txt << "\nscaling (walk scale / (lambda * geodesic scale)):\n";
            header = true;
            const double ratio = wr["cauchy"]["components"][0]["scale"].get<double>() /
                                 (wr["lyapunov"]["lambda"].get<double>() * gr["cauchy"]["components"][0]["scale"].get<double>());
            txt << "    " << wn << " vs " << gn << ": " << num(json(ratio)) << "\n";
        }
    }

    cli::write_atomic(dir / "dashboard.txt", txt.str());
    cli::write_atomic(dir / "dashboard_drift.dat", drift_dat.str());
    cli::write_atomic(dir / "dashboard_fits.dat", fit_dat.str());
    cli::write_atomic(dir / "dashboard_recurrence.dat", rec_dat.str());
    std::cout << txt.str();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"covwalk: random walks and geodesic flow on Z^d-covers of hyperbolic surfaces"};
    app.require_subcommand(1);
    app.set_version_flag("--version", cli::build_id());

    auto* lattice = app.add_subcommand("lattice", "lattice tools");
    lattice->require_subcommand(1);
    auto* check = lattice->add_subcommand("check", "audit a preset or lattice file");
    std::string lattice_arg;
    std::vector<std::string> weight_opts;
    check->add_option("lattice", lattice_arg, "preset name or lattice file")->required();
    check->add_option("--weight", weight_opts, "weight row LABEL=k1,...,kd (repeatable); overrides the file's [weights]");

    RunOptions run_opts;
    auto add_run = [&](CLI::App* sub) {
        sub->add_option("--config", run_opts.config, "experiment config")->required();
        sub->add_option("--out", run_opts.out, "output directory (default runs/<config name>)");
    };
    auto* walk_cmd = app.add_subcommand("walk", "random walk runs");
    walk_cmd->require_subcommand(1);
    auto* walk_run = walk_cmd->add_subcommand("run", "run the walk of a config");
    add_run(walk_run);
    auto* geo_cmd = app.add_subcommand("geodesic", "geodesic flow runs");
    geo_cmd->require_subcommand(1);
    auto* geo_run = geo_cmd->add_subcommand("run", "run the geodesic flow of a config");
    add_run(geo_run);
    auto* rec_cmd = app.add_subcommand("recurrence", "walk run with the recurrence report");
    add_run(rec_cmd);

    LyapunovOptions ly;
    auto* ly_cmd = app.add_subcommand("lyapunov", "Lyapunov exponent of the config's measure");
    ly_cmd->add_option("--config", ly.config, "experiment config")->required();
    ly_cmd->add_option("--steps", ly.steps, "product length (default [analysis] lyapunov_steps)");
    ly_cmd->add_option("--trajectories", ly.trajectories, "independent products (default [analysis] lyapunov_trajectories)");
    ly_cmd->add_flag("--override-zariski", ly.override_check, "estimate even when the density check fails");

    auto* fit_cmd = app.add_subcommand("fit", "fit terminal samples");
    fit_cmd->require_subcommand(1);
    std::string fit_in, statistic = "drift";
    int comp = 1;
    std::string family;
    for (const char* fam : {"cauchy", "gaussian"}) {
        auto* sub = fit_cmd->add_subcommand(fam, std::string(fam) + " fit");
        sub->add_option("--in", fit_in, "records.csv, records.jsonl or a one-column list")->required();
        sub->add_option("--component", comp, "component k of the cover (1-based)")->check(CLI::PositiveNumber);
        sub->add_option("--statistic", statistic, "drift (sigma/time) or sqrt (sigma/sqrt(time)) for record files");
        sub->callback([&family, fam] { family = fam; });
    }

    std::string report_dir;
    auto* report_cmd = app.add_subcommand("report", "collate run summaries into a dashboard");
    report_cmd->add_option("--dir", report_dir, "directory searched for summary.json files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (check->parsed()) return cmd_lattice_check(lattice_arg, weight_opts);
        if (walk_run->parsed()) return cmd_walk(run_opts, false);
        if (rec_cmd->parsed()) return cmd_walk(run_opts, true);
        if (geo_run->parsed()) return cmd_geodesic(run_opts);
        if (ly_cmd->parsed()) return cmd_lyapunov(ly);
        if (fit_cmd->parsed()) return cmd_fit(family, fit_in, comp, statistic);
        if (report_cmd->parsed()) return cmd_report(report_dir);
    } catch (const SetupError& e) {
        std::cerr << "covwalk: " << e.error.what() << "\n";
        return kConfig;
    } catch (const Error& e) {
        std::cerr << "covwalk: " << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError ? kConfig : kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "covwalk: " << e.what() << "\n";
        return kRuntime;
    }
    return kConfig;
}
