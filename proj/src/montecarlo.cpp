#include "rsmc/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "rsmc/errors.hpp"

namespace rsmc {

void StreamingStats::push(double value) {
    ++count;
    const double delta = value - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (value - mean);
}

StreamingStats StreamingStats::merge(const StreamingStats& a, const StreamingStats& b) {
    if (a.count == 0) return b;
    if (b.count == 0) return a;
    StreamingStats out;
    out.count = a.count + b.count;
    const double delta = b.mean - a.mean;
    const double na = static_cast<double>(a.count);
    const double nb = static_cast<double>(b.count);
    const double n = na + nb;
    out.mean = a.mean + delta * nb / n;
    out.m2 = a.m2 + b.m2 + delta * delta * na * nb / n;
    return out;
}

double StreamingStats::variance() const {
    if (count < 2) return 0.0;
    return m2 / static_cast<double>(count - 1);
}

double StreamingStats::std_error() const {
    if (count < 2) return 0.0;
    return std::sqrt(variance() / static_cast<double>(count));
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile: p must be in (0,1)");
    }
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

std::pair<double, double> confidence_interval(const StreamingStats& stats, double level) {
    if (stats.count < 2) {
        throw std::domain_error("confidence_interval: need at least two samples");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw std::domain_error("confidence_interval: level must be in (0,1)");
    }
    const double z = normal_quantile(0.5 + 0.5 * level);
    const double half = z * stats.std_error();
    return {stats.mean - half, stats.mean + half};
}

int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("RSMC_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

constexpr std::uint64_t kChunkSize = 4096;
constexpr std::size_t kMaxSwitchBin = 63;

struct ChunkResult {
    StreamingStats stats;
    std::uint64_t poisoned = 0;
    std::uint64_t used_log = 0;
    std::vector<std::uint64_t> switch_hist = std::vector<std::uint64_t>(kMaxSwitchBin + 1, 0);
    double max_abs = 0.0;
};

}  // namespace

RunReport run_estimate(const SampleFn& fn, std::uint64_t n_samples,
                       std::uint64_t master_seed, std::uint64_t stream_salt,
                       double confidence_level, int threads) {
    if (n_samples < 1) {
        throw std::domain_error("run_estimate: n_samples must be >= 1");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t n_chunks = (n_samples + kChunkSize - 1) / kChunkSize;
    std::vector<ChunkResult> chunks(n_chunks);

    const int n_threads =
        static_cast<int>(std::min<std::uint64_t>(resolve_thread_count(threads), n_chunks));
    std::atomic<std::uint64_t> next_chunk{0};
    auto worker = [&]() {
        for (;;) {
            const std::uint64_t c = next_chunk.fetch_add(1);
            if (c >= n_chunks) return;
            ChunkResult& out = chunks[c];
            const std::uint64_t begin = c * kChunkSize;
            const std::uint64_t end = std::min(begin + kChunkSize, n_samples);
            for (std::uint64_t i = begin; i < end; ++i) {
                RngStream rng(master_seed, derive_stream_index(stream_salt, 0, i));
                const EstimatorSample s = fn(rng);
                const std::size_t bin =
                    std::min<std::size_t>(static_cast<std::size_t>(std::max(s.n_switches, 0)),
                                          kMaxSwitchBin);
                ++out.switch_hist[bin];
                if (s.poisoned) {
                    ++out.poisoned;
                    continue;
                }
                out.stats.push(s.value);
                if (s.used_log_path) ++out.used_log;
                out.max_abs = std::max(out.max_abs, std::fabs(s.value));
            }
        }
    };
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    RunReport report;
    report.n_requested = n_samples;
    report.switch_histogram.assign(kMaxSwitchBin + 1, 0);

    // In-order merge with decade snapshots keeps the reduction deterministic.
    std::uint64_t next_checkpoint = 10000;
    for (std::uint64_t c = 0; c < n_chunks; ++c) {
        report.stats = StreamingStats::merge(report.stats, chunks[c].stats);
        report.poisoned_count += chunks[c].poisoned;
        report.used_log_count += chunks[c].used_log;
        report.max_abs_sample = std::max(report.max_abs_sample, chunks[c].max_abs);
        for (std::size_t b = 0; b <= kMaxSwitchBin; ++b) {
            report.switch_histogram[b] += chunks[c].switch_hist[b];
        }
        const std::uint64_t seen = (c + 1) * kChunkSize;
        while (seen >= next_checkpoint && next_checkpoint <= n_samples) {
            if (report.stats.count > 1) {
                report.m2_checkpoints.emplace_back(
                    report.stats.count, report.stats.m2 / static_cast<double>(report.stats.count));
            }
            next_checkpoint *= 10;
        }
    }
    if (report.stats.count == 0) {
        throw RunError("run_estimate: every sample was poisoned");
    }
    if (report.m2_checkpoints.empty() ||
        report.m2_checkpoints.back().first != report.stats.count) {
        report.m2_checkpoints.emplace_back(
            report.stats.count, report.stats.m2 / static_cast<double>(report.stats.count));
    }

    // Exploding-variance heuristic: the running second moment should settle;
    // a late decade that grows it by more than 2x, or a single sample owning
    // more than half of it past 10^4 draws, marks the run unstable.
    for (std::size_t i = 1; i < report.m2_checkpoints.size(); ++i) {
        const auto& [n_prev, m2_prev] = report.m2_checkpoints[i - 1];
        const auto& [n_cur, m2_cur] = report.m2_checkpoints[i];
        if (n_prev >= 1000 && m2_prev > 0.0 && m2_cur > 2.0 * m2_prev) {
            report.variance_unstable = true;
        }
    }
    if (report.stats.count >= 10000 && report.stats.m2 > 0.0) {
        const double top = report.max_abs_sample;
        if (top * top > 0.5 * report.stats.m2) report.variance_unstable = true;
    }

    report.mean = report.stats.mean;
    report.variance = report.stats.variance();
    report.std_error = report.stats.std_error();
    if (report.stats.count >= 2) {
        std::tie(report.ci_low, report.ci_high) =
            confidence_interval(report.stats, confidence_level);
    } else {
        report.ci_low = report.ci_high = report.mean;
    }
    report.n_effective = report.stats.count;
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw std::domain_error("empirical_quantile: empty sample");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t idx = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(idx);
    if (idx + 1 < values.size()) {
        return values[idx] * (1.0 - frac) + values[idx + 1] * frac;
    }
    return values[idx];
}

StudyReport run_study(const std::vector<NamedEstimator>& estimators, const McConfig& config) {
    if (config.sample_levels.empty()) {
        throw ConfigError("run_study: sample_levels must be nonempty");
    }
    if (config.n_repeats < 1) {
        throw ConfigError("run_study: n_repeats must be >= 1");
    }
    StudyReport study;
    study.levels = config.sample_levels;
    study.confidence_level = config.confidence_level;
    for (const auto& est : estimators) {
        EstimatorStudy es;
        es.name = est.name;
        for (std::size_t li = 0; li < config.sample_levels.size(); ++li) {
            LevelSummary level;
            level.n_samples = config.sample_levels[li];
            for (int r = 0; r < config.n_repeats; ++r) {
                const std::uint64_t salt =
                    derive_stream_index(0x5475647953616C74ull, li,
                                        static_cast<std::uint64_t>(r));
                const RunReport run =
                    run_estimate(est.fn, level.n_samples, config.master_seed, salt,
                                 config.confidence_level, config.threads);
                level.estimates.push_back(run.mean);
                level.poisoned_count += run.poisoned_count;
                level.variance_unstable = level.variance_unstable || run.variance_unstable;
            }
            level.average = 0.0;
            for (double e : level.estimates) level.average += e;
            level.average /= static_cast<double>(level.estimates.size());
            level.band_low = *std::min_element(level.estimates.begin(), level.estimates.end());
            level.band_high = *std::max_element(level.estimates.begin(), level.estimates.end());
            const double alpha = 1.0 - config.confidence_level;
            level.q_low = empirical_quantile(level.estimates, 0.5 * alpha);
            level.q_high = empirical_quantile(level.estimates, 1.0 - 0.5 * alpha);
            es.levels.push_back(std::move(level));
        }
        study.estimators.push_back(std::move(es));
    }
    return study;
}

}  // namespace rsmc
