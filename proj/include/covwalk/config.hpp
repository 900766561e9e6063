#pragma once

// Experiment configs and lattice files. Both use an INI grammar:
//
//   # comment                 (full-line; '#' or ';')
//   [section]
//   key = value               (key may contain spaces, e.g. a word "g1 g2")
//   bare line                 (only in [relator]: one word per line)
//
// Lattice files:  [generator] label = a b c d ; [relator] word ;
//                 [weights] label = k1 .. kd ; [domain] name, center = x y,
//                 word_bound = n.
// Experiment configs: [lattice] [weights] [measure] [atoms] [walk]
//                 [geodesic] [analysis]; keys are listed in README.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "covwalk/walk.hpp"

namespace covwalk::config {

struct IniEntry {
    std::string key;
    std::string value;
    int line = 0;
    bool bare = false;  // no '=' on the line
};

struct IniSection {
    std::string name;
    int line = 0;
    std::vector<IniEntry> entries;
};

/// Throws ConfigError anchored to the offending line.
std::vector<IniSection> parse_ini(std::string_view text);

struct WeightRow {
    std::string label;
    cover::IntVec row;
    int line = 0;
};

struct LatticeFile {
    std::string name = "lattice";
    fuchsian::LatticePresentation presentation;
    hyp2::PointH center = hyp2::PointH::i();
    int word_bound = fuchsian::kDefaultWordBound;
    std::vector<WeightRow> weights;
};

LatticeFile parse_lattice(std::string_view text);
LatticeFile load_lattice(const std::filesystem::path& path);

/// Dirichlet polygon about the file's center, cusps derived from the ideal
/// vertex cycles.
fuchsian::SurfaceGeometry lattice_geometry(const LatticeFile& file);

/// Weight rows in generator order; throws ConfigError (with the row's line)
/// for unknown or missing labels and ragged rows.
std::vector<cover::IntVec> weight_matrix(const fuchsian::LatticePresentation& pres, const std::vector<WeightRow>& rows);

struct ExperimentConfig {
    // [lattice]
    std::string preset;
    std::string lattice_file;  // resolved against the config's directory
    std::optional<double> l1, l2;
    // [weights]
    std::vector<WeightRow> weights;
    // [measure] and [atoms]
    std::string measure = "parametric";  // or "atoms"
    double tau_min = 0.5, tau_max = 1.5;
    std::vector<std::pair<std::string, double>> atoms;  // word text -> probability
    std::vector<int> atom_lines;
    // [walk]
    long long steps = 1000;
    int trajectories = 100;
    std::uint64_t seed = 1;
    long long checkpoint_stride = 0;
    int checkpoints_per_decade = 0;
    std::string start = "fixed";  // or "haar"
    std::optional<double> start_x, start_y;  // unset: the polygon center
    double start_theta = 0.0;
    double return_radius = 2.0;
    std::optional<double> haar_log_height;  // unset: the geometry's disjoint horoball height
    // [geodesic]
    double flow_time = 10.0;
    double dt = 0.25;
    double checkpoint_time = 0.0;  // 0: only the final time
    std::string geodesic_start = "haar";
    // [analysis]
    std::vector<std::string> reports;
    double tolerance = 0.05;
    std::string target = "auto";  // "auto": exact orbit drift when finite, else none; or numbers
    long long lyapunov_steps = 2000;
    int lyapunov_trajectories = 1000;
    long long accumulation_n0 = 0;
    double ec_threshold_factor = 0.5;
    double complement_threshold = 0.1;

    std::filesystem::path base_dir;  // not serialized
};

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fixed section order, fixed key order, shortest round-trip numbers.
/// parse_config(canonical(c)) serializes to the same bytes.
std::string canonical(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Everything a run needs, validated.
struct Bundle {
    ExperimentConfig config;
    std::string lattice_text;  // file contents, empty for presets
    cover::CoverModel model;
    walk::MeasureSpec measure;
    walk::WalkConfig walk;
    walk::GeodesicConfig geodesic;
};

/// Builds the geometry, cover and measure. Throws ConfigError for config
/// problems; lattice and cover errors keep their own codes.
Bundle make_bundle(const ExperimentConfig& cfg);

}  // namespace covwalk::config
