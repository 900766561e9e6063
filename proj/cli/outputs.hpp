#pragma once

// Output artifacts of the covwalk runner: record files, summaries and
// gnuplot-ready .dat tables. Every file is written once, through a temporary
// file in the same directory and a rename.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "covwalk/config.hpp"
#include "covwalk/stats.hpp"
#include "json.hpp"

namespace covwalk::cli {

using json = nlohmann::json;

void write_atomic(const std::filesystem::path& path, const std::string& bytes);

/// Shortest round-trip decimal; "nan", "inf", "-inf" for non-finite values.
std::string fmt(double v);

/// traj,n,k1..kd,drift1..driftd,cusp_height,cartan_t
std::string records_csv(const std::vector<walk::CheckpointRecord>& records, int d);
std::string records_jsonl(const std::vector<walk::CheckpointRecord>& records);
std::string trajectories_csv(const std::vector<walk::TrajectorySummary>& summaries);

/// Terminal record of each trajectory, in trajectory order.
std::vector<walk::CheckpointRecord> terminal_records(const std::vector<walk::CheckpointRecord>& records);

/// Finite doubles as numbers, the rest as null.
json number(double v);
json numbers(const std::vector<double>& v);

/// Results of the [analysis] reports for one run. Each entry also renders
/// its .dat table into `dat` (file name -> contents). Failed fits are
/// recorded under "error" and flagged in `failed`.
struct AnalysisOutput {
    json reports = json::object();
    std::vector<std::pair<std::string, std::string>> dat;
    bool failed = false;
};

/// Explicit [analysis] target, checked against the cover rank; nullopt for
/// "auto".
std::optional<std::vector<double>> explicit_target(const config::Bundle& bundle);

enum class RunKind { Walk, Geodesic };

AnalysisOutput analyze(const config::Bundle& bundle, const walk::WalkResult& result, RunKind kind);

json lattice_json(const cover::CoverModel& model);

/// Schema "covwalk-summary/1"; see README.md.
json summary_json(const config::Bundle& bundle, const std::string& command, const walk::WalkResult& result,
                  const AnalysisOutput& analysis, double elapsed_seconds);

std::string build_id();

}  // namespace covwalk::cli
