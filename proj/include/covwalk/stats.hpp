#pragma once

// Estimators for the drift limit laws: Cauchy and Gaussian fits, KS and
// Hill statistics, Haar means of the drift cocycle, and the accumulation
// and recurrence diagnostics computed from walk records.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "covwalk/walk.hpp"

namespace covwalk::stats {

/// Type-7 (linear interpolation) quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);
double median(std::vector<double> v);

/// sup |F_n - F| for sorted samples.
double ks_distance(const std::vector<double>& sorted, const std::function<double(double)>& cdf);

/// Hill estimator on the top `fraction` of |x - center|.
double hill_tail_index(const std::vector<double>& samples, double center, double fraction = 0.05);

double cauchy_cdf(double x, double location, double scale);
double normal_cdf(double x, double mean, double sd);

struct CauchyFit {
    double location = 0.0;
    double scale = 0.0;  // IQR / 2
    double ks_distance = 0.0;
    double tail_index = 0.0;
    std::size_t n = 0;
};

/// Median / half-IQR fit. Throws DegenerateSamples for N < 100 or IQR = 0.
CauchyFit cauchy_fit(const std::vector<double>& samples);

/// Maximum-likelihood location and scale, started from the quantile fit.
/// Offered as a cross-check of cauchy_fit.
std::pair<double, double> cauchy_mle(const std::vector<double>& samples);

struct GaussianFit {
    double mean = 0.0;
    double sd = 0.0;
    double standard_error = 0.0;
    double ks_distance = 0.0;
    double tail_index = 0.0;
    std::size_t n = 0;
};

/// Throws DegenerateSamples for N < 2 or zero spread.
GaussianFit gaussian_fit(const std::vector<double>& samples);

/// Spearman rank correlation.
double rank_correlation(const std::vector<double>& x, const std::vector<double>& y);

struct MeanEstimate {
    std::vector<double> mean;
    std::vector<double> standard_error;
    std::vector<double> lo, hi;  // bootstrap percentile interval at the 3-SE level
    std::size_t n = 0;
};

/// Monte Carlo mean of sigma(x, g) over Haar-distributed x. Refuses
/// (NonIntegrableConfiguration) when an unfolded cusp makes sigma(., g)
/// non-integrable, unless g is the identity.
MeanEstimate haar_mean_sigma(const cover::CoverModel& model, const hyp2::GroupElement& g, int samples,
                             std::uint64_t seed, int bootstrap = 200, double haar_log_height = 1.0);

/// Exact expectation of sigma under (uniform measure on the orbit) x mu.
std::vector<double> orbit_drift(const cover::FiniteOrbit& orbit, const walk::MeasureSpec& m);

struct DriftSummary {
    std::vector<std::vector<double>> terminal;  // per trajectory, at its last record
    std::vector<double> mean;
    std::vector<std::vector<double>> covariance;
    std::optional<std::vector<double>> target;
    double tolerance = 0.0;
    double fraction_within = 0.0;  // |terminal - target| <= tolerance
};

DriftSummary drift_summary(const std::vector<walk::CheckpointRecord>& records,
                           std::optional<std::vector<double>> target = std::nullopt, double tolerance = 0.05);

struct OscillationReport {
    long long n0 = 0, n_max = 0;
    std::vector<double> ec_range;          // per trajectory, max over E_C basis directions
    std::vector<double> complement_range;  // same for the orthogonal complement
    std::vector<double> total_range;       // max over coordinate directions
    double ec_threshold = 0.0, complement_threshold = 0.0;
    double fraction_ec_exceeds = 0.0;
    double fraction_complement_below = 0.0;
    double fraction_separated = 0.0;  // both at once
};

/// Range (max - min) of the normalized drift over checkpoints n in
/// [n0, n_max], per direction.
OscillationReport accumulation_diagnostic(const std::vector<walk::CheckpointRecord>& records,
                                          const cover::CoverSpec& spec, long long n0, long long n_max,
                                          double ec_threshold, double complement_threshold);

struct RecurrenceReport {
    long long n = 0;
    double return_fraction = 0.0;  // trajectories with a return by step n
    double median_first_return = -1.0;
    double median_max_excursion = 0.0;
    std::string verdict_hint;
};

/// Returns are steps with sigma = 0 and the base point within the walk's
/// return radius of the start (tracked by run_walk).
RecurrenceReport recurrence_report(const walk::WalkResult& result, const cover::CoverSpec& spec, long long n);

/// "recurrent" iff d = 1, or d = 2 and dim E_C = 0; otherwise "transient".
std::string recurrence_verdict(int d, int ec_dim);

}  // namespace covwalk::stats
