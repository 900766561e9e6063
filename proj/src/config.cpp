#include "covwalk/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "covwalk/error.hpp"

namespace covwalk::config {

namespace {

[[noreturn]] void fail(const std::string& what, int line = 0) { throw Error(ErrorCode::ConfigError, what, line); }

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

std::string collapse_ws(std::string_view s) {
    std::string out;
    for (const auto& tok : split_ws(s)) {
        if (!out.empty()) out += ' ';
        out += tok;
    }
    return out;
}

double to_double(std::string_view s, int line, std::string_view what) {
    s = trim(s);
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v)) {
        fail(std::string(what) + ": expected a number, got '" + std::string(s) + "'", line);
    }
    return v;
}

long long to_int(std::string_view s, int line, std::string_view what) {
    s = trim(s);
    long long v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) fail(std::string(what) + ": expected an integer, got '" + std::string(s) + "'", line);
    return v;
}

std::uint64_t to_u64(std::string_view s, int line, std::string_view what) {
    s = trim(s);
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) fail(std::string(what) + ": expected an unsigned integer, got '" + std::string(s) + "'", line);
    return v;
}

std::string num(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const IniEntry& require_keyed(const IniEntry& e, const std::string& section) {
    if (e.bare) fail("[" + section + "] expects 'key = value', got '" + e.key + "'", e.line);
    return e;
}

WeightRow weight_row(const IniEntry& e) {
    WeightRow row;
    row.label = e.key;
    row.line = e.line;
    const auto toks = split_ws(e.value);
    if (toks.empty()) fail("weight row '" + e.key + "' is empty", e.line);
    for (const auto& t : toks) row.row.push_back(to_int(t, e.line, "weight"));
    return row;
}

}  // namespace

std::vector<IniSection> parse_ini(std::string_view text) {
    std::vector<IniSection> out;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header", line_no);
            const auto name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) fail("empty section name", line_no);
            out.push_back({std::string(name), line_no, {}});
            continue;
        }
        if (out.empty()) fail("entry outside of any section", line_no);
        IniEntry e;
        e.line = line_no;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            e.key = collapse_ws(line);
            e.bare = true;
        } else {
            e.key = collapse_ws(line.substr(0, eq));
            e.value = std::string(trim(line.substr(eq + 1)));
            if (e.key.empty()) fail("missing key before '='", line_no);
        }
        out.back().entries.push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lattice files

LatticeFile parse_lattice(std::string_view text) {
    const auto sections = parse_ini(text);
    LatticeFile file;
    std::vector<fuchsian::Generator> gens;
    std::vector<const IniEntry*> relator_entries;
    for (const auto& sec : sections) {
        if (sec.name == "generator") {
            for (const auto& e : sec.entries) {
                require_keyed(e, sec.name);
                const auto toks = split_ws(e.value);
                if (toks.size() != 4) fail("generator '" + e.key + "' needs 4 entries a b c d", e.line);
                double m[4];
                for (int k = 0; k < 4; ++k) m[k] = to_double(toks[k], e.line, "generator entry");
                const double det = hyp2::det2(m[0], m[1], m[2], m[3]);
                // decimal entries are accepted to 1e-6 in the determinant, then rescaled
                if (!(std::abs(det - 1.0) <= 1e-6)) {
                    fail("generator '" + e.key + "' has determinant " + num(det) + ", expected 1", e.line);
                }
                gens.push_back({e.key, hyp2::GroupElement::normalized(m[0], m[1], m[2], m[3])});
            }
        } else if (sec.name == "relator") {
            for (const auto& e : sec.entries) {
                if (!e.bare) fail("[relator] lines hold one word each, without '='", e.line);
                relator_entries.push_back(&e);
            }
        } else if (sec.name == "weights") {
            for (const auto& e : sec.entries) file.weights.push_back(weight_row(require_keyed(e, sec.name)));
        } else if (sec.name == "domain") {
            for (const auto& e : sec.entries) {
                require_keyed(e, sec.name);
                if (e.key == "name") {
                    file.name = e.value;
                } else if (e.key == "center") {
                    const auto toks = split_ws(e.value);
                    if (toks.size() != 2) fail("center needs 'x y'", e.line);
                    const double y = to_double(toks[1], e.line, "center");
                    if (!(y > 0.0)) fail("center must lie in the upper half-plane", e.line);
                    file.center = hyp2::PointH(to_double(toks[0], e.line, "center"), y);
                } else if (e.key == "word_bound") {
                    file.word_bound = static_cast<int>(to_int(e.value, e.line, "word_bound"));
                    if (file.word_bound < 1) fail("word_bound must be >= 1", e.line);
                } else {
                    fail("unknown key '" + e.key + "' in [domain]", e.line);
                }
            }
        } else {
            fail("unknown section [" + sec.name + "]", sec.line);
        }
    }
    if (gens.empty()) fail("lattice file has no [generator] entries");

    const fuchsian::LatticePresentation free_pres(gens, {});
    std::vector<fuchsian::Word> relators;
    std::vector<int> lines;
    for (const auto* e : relator_entries) {
        try {
            relators.push_back(free_pres.parse_word(e->key));
        } catch (const Error& err) {
            fail(std::string("bad relator: ") + err.what(), e->line);
        }
        lines.push_back(e->line);
    }
    file.presentation = fuchsian::LatticePresentation(std::move(gens), std::move(relators), std::move(lines));
    return file;
}

LatticeFile load_lattice(const std::filesystem::path& path) { return parse_lattice(read_file(path)); }

fuchsian::SurfaceGeometry lattice_geometry(const LatticeFile& file) {
    auto polygon = fuchsian::dirichlet_domain(file.presentation, file.center, file.word_bound);
    return fuchsian::make_geometry(file.name, file.presentation, std::move(polygon));
}

std::vector<cover::IntVec> weight_matrix(const fuchsian::LatticePresentation& pres, const std::vector<WeightRow>& rows) {
    if (rows.empty()) fail("no [weights] rows");
    std::vector<cover::IntVec> w(pres.rank());
    std::vector<int> seen(pres.rank(), 0);
    const std::size_t d = rows.front().row.size();
    for (const auto& r : rows) {
        const int g = pres.index_of(r.label);
        if (g < 0) fail("weight row for unknown generator '" + r.label + "'", r.line);
        if (seen[g]) fail("duplicate weight row for '" + r.label + "'", r.line);
        if (r.row.size() != d) fail("weight row '" + r.label + "' has " + std::to_string(r.row.size()) + " entries, expected " + std::to_string(d), r.line);
        seen[g] = r.line > 0 ? r.line : 1;
        w[g] = r.row;
    }
    for (std::size_t g = 0; g < pres.rank(); ++g) {
        if (!seen[g]) fail("missing weight row for generator '" + pres.generators()[g].label + "'", rows.front().line);
    }
    return w;
}

// ---------------------------------------------------------------------------
// Experiment configs

namespace {

const std::set<std::string> kReports{"drift", "cauchy", "gaussian", "accumulation", "recurrence", "lyapunov"};

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    ExperimentConfig c;
    c.base_dir = base_dir;
    bool have_atoms = false;
    for (const auto& sec : parse_ini(text)) {
        const auto& s = sec.name;
        if (s == "weights") {
            for (const auto& e : sec.entries) c.weights.push_back(weight_row(require_keyed(e, s)));
            continue;
        }
        if (s == "atoms") {
            have_atoms = true;
            for (const auto& e : sec.entries) {
                require_keyed(e, s);
                const double p = to_double(e.value, e.line, "atom probability");
                if (!(p > 0.0)) fail("atom probability must be positive", e.line);
                c.atoms.emplace_back(e.key, p);
                c.atom_lines.push_back(e.line);
            }
            continue;
        }
        if (s != "lattice" && s != "measure" && s != "walk" && s != "geodesic" && s != "analysis") {
            fail("unknown section [" + s + "]", sec.line);
        }
        for (const auto& e : sec.entries) {
            require_keyed(e, s);
            const auto& k = e.key;
            const auto& v = e.value;
            const int ln = e.line;
            auto unknown = [&] { fail("unknown key '" + k + "' in [" + s + "]", ln); };
            if (s == "lattice") {
                if (k == "preset") c.preset = v;
                else if (k == "file") c.lattice_file = v;
                else if (k == "l1") c.l1 = to_double(v, ln, k);
                else if (k == "l2") c.l2 = to_double(v, ln, k);
                else unknown();
            } else if (s == "measure") {
                if (k == "kind") {
                    if (v != "atoms" && v != "parametric") fail("measure kind must be 'atoms' or 'parametric'", ln);
                    c.measure = v;
                } else if (k == "tau_min") c.tau_min = to_double(v, ln, k);
                else if (k == "tau_max") c.tau_max = to_double(v, ln, k);
                else unknown();
            } else if (s == "walk") {
                if (k == "steps") c.steps = to_int(v, ln, k);
                else if (k == "trajectories") c.trajectories = static_cast<int>(to_int(v, ln, k));
                else if (k == "seed") c.seed = to_u64(v, ln, k);
                else if (k == "checkpoint_stride") c.checkpoint_stride = to_int(v, ln, k);
                else if (k == "checkpoints_per_decade") c.checkpoints_per_decade = static_cast<int>(to_int(v, ln, k));
                else if (k == "start") {
                    if (v != "fixed" && v != "haar") fail("start must be 'fixed' or 'haar'", ln);
                    c.start = v;
                } else if (k == "start_x") c.start_x = to_double(v, ln, k);
                else if (k == "start_y") c.start_y = to_double(v, ln, k);
                else if (k == "start_theta") c.start_theta = to_double(v, ln, k);
                else if (k == "return_radius") c.return_radius = to_double(v, ln, k);
                else if (k == "haar_log_height") c.haar_log_height = to_double(v, ln, k);
                else unknown();
            } else if (s == "geodesic") {
                if (k == "T") c.flow_time = to_double(v, ln, k);
                else if (k == "dt") c.dt = to_double(v, ln, k);
                else if (k == "checkpoint_time") c.checkpoint_time = to_double(v, ln, k);
                else if (k == "start") {
                    if (v != "fixed" && v != "haar") fail("start must be 'fixed' or 'haar'", ln);
                    c.geodesic_start = v;
                } else unknown();
            } else if (s == "analysis") {
                if (k == "reports") {
                    c.reports.clear();
                    for (const auto& r : split_ws(v)) {
                        if (!kReports.count(r)) fail("unknown report '" + r + "'", ln);
                        c.reports.push_back(r);
                    }
                } else if (k == "target") {
                    if (v != "auto") {
                        for (const auto& t : split_ws(v)) to_double(t, ln, k);
                    }
                    c.target = collapse_ws(v);
                } else if (k == "tolerance") c.tolerance = to_double(v, ln, k);
                else if (k == "accumulation_n0") c.accumulation_n0 = to_int(v, ln, k);
                else if (k == "ec_threshold_factor") c.ec_threshold_factor = to_double(v, ln, k);
                else if (k == "complement_threshold") c.complement_threshold = to_double(v, ln, k);
                else if (k == "lyapunov_steps") c.lyapunov_steps = to_int(v, ln, k);
                else if (k == "lyapunov_trajectories") c.lyapunov_trajectories = static_cast<int>(to_int(v, ln, k));
                else unknown();
            }
        }
    }

    if (c.preset.empty() == c.lattice_file.empty()) fail("[lattice] needs exactly one of 'preset' or 'file'");
    if (c.measure == "atoms" && !have_atoms) fail("measure kind 'atoms' needs an [atoms] section");
    if (c.measure == "parametric" && have_atoms) fail("[atoms] given but measure kind is 'parametric'");
    if (c.steps < 0) fail("steps must be >= 0");
    if (c.trajectories < 1) fail("trajectories must be >= 1");
    if (c.checkpoint_stride < 0 || c.checkpoints_per_decade < 0) fail("checkpoint settings must be >= 0");
    if (c.start_y && !(*c.start_y > 0.0)) fail("start_y must be positive");
    if (c.flow_time < 0.0) fail("geodesic T must be >= 0");
    if (c.checkpoint_time < 0.0) fail("checkpoint_time must be >= 0");
    std::sort(c.reports.begin(), c.reports.end());
    c.reports.erase(std::unique(c.reports.begin(), c.reports.end()), c.reports.end());
    for (auto& [word, p] : c.atoms) word = collapse_ws(word);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path), path.parent_path());
}

std::string canonical(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "[lattice]\n";
    if (!c.preset.empty()) o << "preset = " << c.preset << "\n";
    if (!c.lattice_file.empty()) o << "file = " << c.lattice_file << "\n";
    if (c.l1) o << "l1 = " << num(*c.l1) << "\n";
    if (c.l2) o << "l2 = " << num(*c.l2) << "\n";

    if (!c.weights.empty()) {
        auto rows = c.weights;
        std::sort(rows.begin(), rows.end(), [](const WeightRow& a, const WeightRow& b) { return a.label < b.label; });
        o << "\n[weights]\n";
        for (const auto& r : rows) {
            o << r.label << " =";
            for (auto k : r.row) o << ' ' << k;
            o << "\n";
        }
    }

    o << "\n[measure]\nkind = " << c.measure << "\n";
    if (c.measure == "parametric") o << "tau_min = " << num(c.tau_min) << "\ntau_max = " << num(c.tau_max) << "\n";
    if (c.measure == "atoms") {
        o << "\n[atoms]\n";
        for (const auto& [word, p] : c.atoms) o << word << " = " << num(p) << "\n";
    }

    o << "\n[walk]\n"
      << "steps = " << c.steps << "\n"
      << "trajectories = " << c.trajectories << "\n"
      << "seed = " << c.seed << "\n"
      << "checkpoint_stride = " << c.checkpoint_stride << "\n"
      << "checkpoints_per_decade = " << c.checkpoints_per_decade << "\n"
      << "start = " << c.start << "\n";
    if (c.start_x) o << "start_x = " << num(*c.start_x) << "\n";
    if (c.start_y) o << "start_y = " << num(*c.start_y) << "\n";
    o << "start_theta = " << num(c.start_theta) << "\n"
      << "return_radius = " << num(c.return_radius) << "\n";
    if (c.haar_log_height) o << "haar_log_height = " << num(*c.haar_log_height) << "\n";

    o << "\n[geodesic]\n"
      << "T = " << num(c.flow_time) << "\n"
      << "dt = " << num(c.dt) << "\n"
      << "checkpoint_time = " << num(c.checkpoint_time) << "\n"
      << "start = " << c.geodesic_start << "\n";

    o << "\n[analysis]\nreports =";
    for (const auto& r : c.reports) o << ' ' << r;
    o << "\n"
      << "target = " << c.target << "\n"
      << "tolerance = " << num(c.tolerance) << "\n"
      << "accumulation_n0 = " << c.accumulation_n0 << "\n"
      << "ec_threshold_factor = " << num(c.ec_threshold_factor) << "\n"
      << "complement_threshold = " << num(c.complement_threshold) << "\n"
      << "lyapunov_steps = " << c.lyapunov_steps << "\n"
      << "lyapunov_trajectories = " << c.lyapunov_trajectories << "\n";
    return o.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Bundle make_bundle(const ExperimentConfig& cfg) {
    std::string lattice_text;
    std::vector<WeightRow> file_weights;
    fuchsian::SurfaceGeometry geom;
    if (!cfg.preset.empty()) {
        fuchsian::TorusParams tp;
        if (cfg.l1 || cfg.l2) {
            if (cfg.preset != "punctured_square_torus") fail("l1/l2 apply to the punctured_square_torus preset only");
            // the square torus needs sinh(l1/2) sinh(l2/2) = 1; a single length fixes the other
            auto partner = [](double l) { return 2.0 * std::asinh(1.0 / std::sinh(l / 2.0)); };
            tp.l1 = cfg.l1 ? *cfg.l1 : partner(*cfg.l2);
            tp.l2 = cfg.l2 ? *cfg.l2 : partner(tp.l1);
            if (!(tp.l1 > 0.0) || !(tp.l2 > 0.0)) fail("translation lengths must be positive");
        }
        const auto names = fuchsian::builtin_names();
        if (std::find(names.begin(), names.end(), cfg.preset) == names.end()) fail("unknown preset '" + cfg.preset + "'");
        geom = fuchsian::builtin_lattice(cfg.preset, tp);
    } else {
        const auto path = cfg.base_dir.empty() ? std::filesystem::path(cfg.lattice_file) : cfg.base_dir / cfg.lattice_file;
        lattice_text = read_file(path);
        auto file = parse_lattice(lattice_text);
        file_weights = file.weights;
        geom = lattice_geometry(file);
    }

    const auto& rows = cfg.weights.empty() ? file_weights : cfg.weights;
    auto w = weight_matrix(geom.presentation, rows);
    const int d = static_cast<int>(w.front().size());
    auto spec = cover::validate_cover(geom.presentation, geom.cusps, d, std::move(w));
    cover::CoverModel model(std::move(geom), std::move(spec));
    const auto& pres = model.geometry().presentation;

    walk::MeasureSpec measure = [&] {
        if (cfg.measure == "parametric") {
            if (!(cfg.tau_min > 0.0) || !(cfg.tau_min <= cfg.tau_max)) fail("parametric measure needs 0 < tau_min <= tau_max");
            return walk::MeasureSpec::parametric(cfg.tau_min, cfg.tau_max);
        }
        std::vector<walk::Atom> atoms;
        double total = 0.0;
        for (std::size_t k = 0; k < cfg.atoms.size(); ++k) {
            const auto& [text, p] = cfg.atoms[k];
            const int line = k < cfg.atom_lines.size() ? cfg.atom_lines[k] : 0;
            fuchsian::Word word;
            try {
                word = pres.parse_word(text);
            } catch (const Error& e) {
                fail(std::string("bad atom word: ") + e.what(), line);
            }
            atoms.push_back({hyp2::renormalize(pres.evaluate(word)), p, text});
            total += p;
        }
        if (!(std::abs(total - 1.0) <= 1e-12)) fail("atom probabilities sum to " + num(total) + ", expected 1");
        return walk::MeasureSpec::atoms(std::move(atoms));
    }();

    const auto& center = model.geometry().polygon.center;
    const hyp2::PointH start_point(cfg.start_x.value_or(center.x()), cfg.start_y.value_or(center.y()));
    const auto start_rep = hyp2::rotate_fiber(hyp2::UnitTangent::upright_at(start_point), cfg.start_theta).rep();

    walk::WalkConfig wc;
    wc.steps = cfg.steps;
    wc.trajectories = cfg.trajectories;
    wc.seed = cfg.seed;
    wc.checkpoints = walk::make_checkpoints(cfg.steps, cfg.checkpoint_stride, cfg.checkpoints_per_decade);
    wc.start = cfg.start == "haar" ? walk::StartMode::Haar : walk::StartMode::Fixed;
    wc.start_rep = start_rep;
    const double haar_height = cfg.haar_log_height.value_or(model.geometry().disjoint_height);
    wc.haar_log_height = haar_height;
    wc.return_radius = cfg.return_radius;

    walk::GeodesicConfig gc;
    gc.T = cfg.flow_time;
    gc.dt = cfg.dt;
    if (!(cfg.dt > 0.0 && cfg.dt <= 0.5)) fail("geodesic dt must lie in (0, 0.5]");
    gc.trajectories = cfg.trajectories;
    gc.seed = cfg.seed;
    if (cfg.checkpoint_time > 0.0) {
        for (long long k = 1; k * cfg.checkpoint_time < cfg.flow_time - 1e-9; ++k) gc.checkpoints.push_back(k * cfg.checkpoint_time);
        gc.checkpoints.push_back(cfg.flow_time);
    }
    gc.start = cfg.geodesic_start == "haar" ? walk::StartMode::Haar : walk::StartMode::Fixed;
    gc.start_rep = start_rep;
    gc.haar_log_height = haar_height;

    return Bundle{cfg, std::move(lattice_text), std::move(model), std::move(measure), std::move(wc), std::move(gc)};
}

}  // namespace covwalk::config
