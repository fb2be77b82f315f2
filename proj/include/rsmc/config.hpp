#pragma once

#include <string>

#include "rsmc/estimators.hpp"
#include "rsmc/montecarlo.hpp"
#include "rsmc/problem.hpp"

namespace rsmc {

// Fully validated run configuration assembled from an INI-style document
// with sections [problem], [estimator], [lifetimes], [sigma], [mc].
struct ParsedConfig {
    ProblemSpec problem;
    McConfig mc;
    SigmaSchedule schedule;
    LifetimeParams lifetimes;
    EventDistribution events;
    bool has_events = false;  // false = default uniform over active kinds
    EstimatorOptions options;
    double perturb_sigma0 = 0.1;
    double eval_t = 0.0;
    double eval_x = 0.0;

    EventDistribution effective_events(bool need_correction) const;
};

// Parses and validates; throws ConfigError carrying a line number for
// syntax problems and the violated invariant for semantic ones.
ParsedConfig parse_config(const std::string& text);

ParsedConfig load_config_file(const std::string& path);

// Canonical serialization; parse(emit(parse(text))) is a fixed point.
std::string emit_config(const ParsedConfig& config);

// Binds a per-sample estimator closure for one of the method names
// (unbiased | perturbed | branching | unbiased-nonlinear | derivative1 |
// derivative2).  Throws ConfigError for unusable combinations.
SampleFn make_sampler(const ParsedConfig& config, const std::string& method);

// Reference values when available: the characteristics/analytic solution
// and the perturbed closed form at the config's evaluation point.
void attach_references(const ParsedConfig& config, StudyReport& report);

}  // namespace rsmc
