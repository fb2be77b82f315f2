#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rsmc/config.hpp"
#include "rsmc/errors.hpp"
#include "rsmc/montecarlo.hpp"

using namespace rsmc;

TEST_CASE("streaming stats match a brute-force two-pass computation") {
    RngStream rng(21, 22);
    std::vector<double> values(1000000);
    for (auto& v : values) v = 3.0 + 2.0 * rng.normal();

    StreamingStats stream;
    for (double v : values) stream.push(v);

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(values.size() - 1);

    CHECK(stream.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(stream.variance() == doctest::Approx(var).epsilon(1e-10));
}

TEST_CASE("merge: identity, halves, associativity under fixed order") {
    RngStream rng(23, 24);
    std::vector<double> values(10001);
    for (auto& v : values) v = rng.normal() * rng.normal();

    StreamingStats whole;
    StreamingStats left;
    StreamingStats right;
    for (std::size_t i = 0; i < values.size(); ++i) {
        whole.push(values[i]);
        (i < values.size() / 2 ? left : right).push(values[i]);
    }
    const StreamingStats merged = StreamingStats::merge(left, right);
    CHECK(merged.count == whole.count);
    CHECK(merged.mean == doctest::Approx(whole.mean).epsilon(1e-12));
    CHECK(merged.m2 == doctest::Approx(whole.m2).epsilon(1e-10));

    const StreamingStats with_empty = StreamingStats::merge(StreamingStats{}, whole);
    CHECK(with_empty.count == whole.count);
    CHECK(with_empty.mean == whole.mean);
    CHECK(with_empty.m2 == whole.m2);

    // identical inputs produce identical bits
    const StreamingStats again = StreamingStats::merge(left, right);
    CHECK(again.mean == merged.mean);
    CHECK(again.m2 == merged.m2);
}

TEST_CASE("confidence intervals at reference quantiles") {
    StreamingStats zero_var;
    zero_var.count = 10;
    zero_var.mean = 4.0;
    zero_var.m2 = 0.0;
    const auto [lo0, hi0] = confidence_interval(zero_var, 0.9);
    CHECK(lo0 == 4.0);
    CHECK(hi0 == 4.0);

    StreamingStats unit;  // mean 0, SE 1: two samples with m2 = 2
    unit.count = 2;
    unit.mean = 0.0;
    unit.m2 = 2.0;
    const auto [lo1, hi1] = confidence_interval(unit, 0.90);
    CHECK(lo1 == doctest::Approx(-1.6448536269514722).epsilon(1e-9));
    CHECK(hi1 == doctest::Approx(1.6448536269514722).epsilon(1e-9));

    StreamingStats half;  // mean 2, SE 0.5
    half.count = 2;
    half.mean = 2.0;
    half.m2 = 0.5;
    const auto [lo2, hi2] = confidence_interval(half, 0.80);
    CHECK(lo2 == doctest::Approx(1.3592242172276761).epsilon(1e-9));
    CHECK(hi2 == doctest::Approx(2.6407757827723239).epsilon(1e-9));

    StreamingStats single;
    single.count = 1;
    CHECK_THROWS_AS(confidence_interval(single, 0.9), std::domain_error);
    CHECK_THROWS_AS(confidence_interval(unit, 1.5), std::domain_error);
}

TEST_CASE("run_estimate: constant estimator and poisoned accounting") {
    const SampleFn constant = [](RngStream&) {
        EstimatorSample s;
        s.value = 7.25;
        return s;
    };
    const RunReport run = run_estimate(constant, 10000, 1, 0, 0.9, 4);
    CHECK(run.mean == 7.25);
    CHECK(run.variance == 0.0);
    CHECK(run.ci_low == 7.25);
    CHECK(run.ci_high == 7.25);
    CHECK(run.poisoned_count == 0);
    CHECK(run.n_effective == 10000);

    const SampleFn half_poisoned = [](RngStream& rng) {
        EstimatorSample s;
        s.value = 1.0;
        s.poisoned = rng.uniform01() < 0.5;
        return s;
    };
    const RunReport run2 = run_estimate(half_poisoned, 10000, 2, 0, 0.9, 2);
    CHECK(run2.poisoned_count + run2.n_effective == 10000);
    CHECK(run2.poisoned_count > 4000);
    CHECK(run2.mean == 1.0);

    const SampleFn all_poisoned = [](RngStream&) {
        EstimatorSample s;
        s.poisoned = true;
        return s;
    };
    CHECK_THROWS_AS(run_estimate(all_poisoned, 100, 3, 0, 0.9, 1), RunError);
}

TEST_CASE("run_estimate is bit-identical across thread counts") {
    const SampleFn fn = [](RngStream& rng) {
        EstimatorSample s;
        // value depends only on the stream, never on scheduling
        s.value = rng.normal() + 0.25 * rng.normal() * rng.normal();
        s.n_switches = static_cast<int>(rng.uniform01() * 4);
        return s;
    };
    const RunReport r1 = run_estimate(fn, 50000, 99, 7, 0.9, 1);
    const RunReport r4 = run_estimate(fn, 50000, 99, 7, 0.9, 4);
    const RunReport r8 = run_estimate(fn, 50000, 99, 7, 0.9, 8);
    CHECK(r1.mean == r4.mean);
    CHECK(r4.mean == r8.mean);
    CHECK(r1.stats.m2 == r4.stats.m2);
    CHECK(r4.stats.m2 == r8.stats.m2);
    CHECK(r1.switch_histogram == r4.switch_histogram);
    CHECK(r4.switch_histogram == r8.switch_histogram);
    REQUIRE(r1.m2_checkpoints.size() == r8.m2_checkpoints.size());
    for (std::size_t i = 0; i < r1.m2_checkpoints.size(); ++i) {
        CHECK(r1.m2_checkpoints[i].first == r8.m2_checkpoints[i].first);
        CHECK(r1.m2_checkpoints[i].second == r8.m2_checkpoints[i].second);
    }
}

TEST_CASE("variance diagnostic: flags heavy tails, stays quiet on benign samplers") {
    const SampleFn benign = [](RngStream& rng) {
        EstimatorSample s;
        s.value = rng.normal();
        return s;
    };
    CHECK_FALSE(run_estimate(benign, 100000, 5, 0, 0.9, 0).variance_unstable);

    const SampleFn pareto = [](RngStream& rng) {
        EstimatorSample s;
        // infinite variance: tail index 1.5
        s.value = std::pow(rng.uniform01(), -1.0 / 1.5);
        return s;
    };
    CHECK(run_estimate(pareto, 100000, 6, 0, 0.9, 0).variance_unstable);
}

TEST_CASE("empirical quantiles interpolate") {
    std::vector<double> values = {4.0, 1.0, 3.0, 2.0};
    CHECK(empirical_quantile(values, 0.0) == 1.0);
    CHECK(empirical_quantile(values, 1.0) == 4.0);
    CHECK(empirical_quantile(values, 0.5) == doctest::Approx(2.5));
    CHECK_THROWS_AS(empirical_quantile({}, 0.5), std::domain_error);
}

TEST_CASE("run_study: shapes, degenerate bands, deterministic replay") {
    const SampleFn fn = [](RngStream& rng) {
        EstimatorSample s;
        s.value = 1.0 + 0.1 * rng.normal();
        return s;
    };
    McConfig config;
    config.sample_levels = {500, 2000};
    config.n_repeats = 1;
    config.master_seed = 2024;
    config.confidence_level = 0.8;
    const StudyReport single = run_study({{"only", fn}}, config);
    REQUIRE(single.estimators.size() == 1);
    REQUIRE(single.estimators[0].levels.size() == 2);
    for (const auto& level : single.estimators[0].levels) {
        CHECK(level.band_low == level.band_high);    // R = 1 degenerates
        CHECK(level.band_low == level.estimates[0]);
        CHECK(level.q_low == level.q_high);
    }

    config.n_repeats = 8;
    const StudyReport a = run_study({{"only", fn}}, config);
    const StudyReport b = run_study({{"only", fn}}, config);
    for (std::size_t li = 0; li < a.estimators[0].levels.size(); ++li) {
        const auto& la = a.estimators[0].levels[li];
        const auto& lb = b.estimators[0].levels[li];
        CHECK(la.estimates == lb.estimates);  // bit-level replay
        CHECK(la.band_low <= la.q_low);
        CHECK(la.q_low <= la.q_high);
        CHECK(la.q_high <= la.band_high);
        CHECK(la.band_low <= la.average);
        CHECK(la.average <= la.band_high);
    }
    CHECK_THROWS_AS(run_study({{"only", fn}}, McConfig{}), ConfigError);
}

TEST_CASE("confidence interval coverage on a known mean") {
    // 90% normal-quantile intervals over repeated runs of a well-behaved
    // sampler should cover the truth about 90% of the time
    const SampleFn fn = [](RngStream& rng) {
        EstimatorSample s;
        s.value = 2.0 + rng.normal() * rng.uniform01();
        return s;
    };
    int covered = 0;
    const int runs = 200;
    for (int r = 0; r < runs; ++r) {
        const RunReport run =
            run_estimate(fn, 2000, 4242, static_cast<std::uint64_t>(r), 0.90, 0);
        if (run.ci_low <= 2.0 && 2.0 <= run.ci_high) ++covered;
    }
    CHECK(covered >= 170);
    CHECK(covered <= 190);
}

TEST_CASE("thread count resolution") {
    CHECK(resolve_thread_count(3) == 3);
    CHECK(resolve_thread_count(0) >= 1);
}
