#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rsmc/estimators.hpp"

namespace rsmc {

// Welford/Chan streaming moments with exact pairwise merge.
struct StreamingStats {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double value);
    static StreamingStats merge(const StreamingStats& a, const StreamingStats& b);

    double variance() const;   // sample variance (n-1 denominator)
    double std_error() const;  // sqrt(variance / count)
};

// Normal-quantile interval mean +- z(level) * std_error.  Throws
// std::domain_error when count < 2 or the level is not in (0, 1).
std::pair<double, double> confidence_interval(const StreamingStats& stats, double level);

// Standard normal quantile at probability p (0 < p < 1).
double normal_quantile(double p);

struct McConfig {
    std::uint64_t n_samples = 100000;
    int n_repeats = 1;
    std::vector<std::uint64_t> sample_levels;
    std::uint64_t master_seed = 0;
    double confidence_level = 0.90;
    std::string estimator = "unbiased";
    bool unsafe_variance = false;
    int threads = 0;  // 0 = RSMC_THREADS env var, else hardware concurrency
};

struct RunReport {
    StreamingStats stats;
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t n_requested = 0;
    std::uint64_t n_effective = 0;
    std::uint64_t poisoned_count = 0;
    std::uint64_t used_log_count = 0;
    std::vector<std::uint64_t> switch_histogram;  // clamped at the last bin
    double max_abs_sample = 0.0;
    // (sample count, second moment) snapshots at decade boundaries of the
    // deterministic in-order reduction; drives the variance diagnostic.
    std::vector<std::pair<std::uint64_t, double>> m2_checkpoints;
    bool variance_unstable = false;
    double wall_time_seconds = 0.0;
};

using SampleFn = std::function<EstimatorSample(RngStream&)>;

// Runs n_samples independent draws of fn, one RNG stream per sample derived
// from (master_seed, stream_salt, sample index).  Samples execute on a
// thread pool in fixed-size chunks merged in index order, so the report is
// bit-identical for any thread count.  Throws RunError if every sample
// was poisoned.
RunReport run_estimate(const SampleFn& fn, std::uint64_t n_samples,
                       std::uint64_t master_seed, std::uint64_t stream_salt,
                       double confidence_level, int threads);

int resolve_thread_count(int requested);

// Per-estimator study data over sample levels and repeats.
struct LevelSummary {
    std::uint64_t n_samples = 0;
    std::vector<double> estimates;  // one per repeat
    double average = 0.0;
    double band_low = 0.0;   // min across repeats (the paper's proxy band)
    double band_high = 0.0;
    double q_low = 0.0;      // empirical quantiles across repeats
    double q_high = 0.0;
    std::uint64_t poisoned_count = 0;
    bool variance_unstable = false;
};

struct EstimatorStudy {
    std::string name;
    std::vector<LevelSummary> levels;
};

struct StudyReport {
    std::vector<std::uint64_t> levels;
    double confidence_level = 0.90;
    std::vector<EstimatorStudy> estimators;
    double true_value = 0.0;
    bool has_true_value = false;
    double biased_reference = 0.0;
    bool has_biased_reference = false;
};

struct NamedEstimator {
    std::string name;
    SampleFn fn;
};

// Independent run_estimate per (level, repeat, estimator) with seeds derived
// from the master seed; level/repeat pairs share streams across estimators
// so method comparisons are paired.
StudyReport run_study(const std::vector<NamedEstimator>& estimators, const McConfig& config);

// Empirical quantile with linear interpolation (q in [0, 1]).
double empirical_quantile(std::vector<double> values, double q);

}  // namespace rsmc
