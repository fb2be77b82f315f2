#pragma once

#include <vector>

#include "rsmc/distributions.hpp"
#include "rsmc/mesh.hpp"
#include "rsmc/problem.hpp"
#include "rsmc/rng.hpp"

namespace rsmc {

struct EstimatorOptions {
    // 1.0 gives the theorem-form switch factor (M + V); 0.5 the half-V
    // variant (M + V/2) kept for A/B comparison.
    double v_scale = 1.0;
    bool unsafe_variance = false;
    int depth_cap = 50;  // branching recursion generations
};

// Categorical law over the event kinds fired at a switching time of the
// branching estimators: the Laplacian correction plus one entry per
// nonlinearity monomial (in problem order).
struct EventDistribution {
    double q_correction = 0.0;
    std::vector<double> q_monomials;

    static EventDistribution uniform_with_correction(const ProblemSpec& problem);
    static EventDistribution uniform_monomials(const ProblemSpec& problem);

    // Positive on every kind present, total mass 1 within 1e-12.
    void validate(const ProblemSpec& problem, bool need_correction) const;
};

// One Monte Carlo realisation with diagnostics.
struct EstimatorSample {
    double value = 0.0;
    int n_switches = 0;       // mesh switches (transport) or events fired (branching)
    bool used_log_path = false;
    bool poisoned = false;    // overflow / depth cap; excluded from statistics
    double max_abs_p = 0.0;   // largest |switch factor| seen
    double beta1 = 0.0;       // antithetic pair components of the terminal payoff
    double beta2 = 0.0;
};

// ---- unbiased regime-switching transport estimator (linear problems) ----

// Pure per-path payoff evaluation; exposed so fixed paths can be replayed
// in identity and symmetry tests.
EstimatorSample evaluate_transport(const PathSample& path, const ProblemSpec& problem,
                                   const SigmaSchedule& schedule,
                                   const LifetimeParams& params,
                                   const EstimatorOptions& opts);

EstimatorSample sample_unbiased_transport(const ProblemSpec& problem, double t, double x,
                                          const SigmaSchedule& schedule,
                                          const LifetimeParams& params,
                                          const EstimatorOptions& opts, RngStream& rng);

// Derivative payoffs d^i/dx^i, i in {1, 2}: psi-tilde times the first-leg
// Malliavin weight, with the Phi_1/Phi_2 control-variate substitution on
// the no-switch stratum.
EstimatorSample evaluate_derivative(const PathSample& path, int order,
                                    const ProblemSpec& problem,
                                    const SigmaSchedule& schedule,
                                    const LifetimeParams& params,
                                    const EstimatorOptions& opts);

EstimatorSample sample_derivative_estimate(const ProblemSpec& problem, double t, double x,
                                           int order, const SigmaSchedule& schedule,
                                           const LifetimeParams& params,
                                           const EstimatorOptions& opts, RngStream& rng);

// ---- biased baselines and the experimental nonlinear estimator ----

// Exact simulation of the Laplacian-perturbed linear solution:
// g(x + int_t^T b + sigma0 sqrt(T-t) Z).
EstimatorSample sample_perturbed_linear(const ProblemSpec& problem, double t, double x,
                                        double sigma0, RngStream& rng);

// Branching estimator for the perturbed semilinear PDE (biased for the
// transport problem).  Events draw nonlinearity monomials only.
EstimatorSample sample_branching_semilinear(const ProblemSpec& problem, double t, double x,
                                            double sigma0, const EventDistribution& events,
                                            const LifetimeParams& params,
                                            const EstimatorOptions& opts, RngStream& rng);

// EXPERIMENTAL: regime-switching nonlinear estimator.  At each arrival the
// Laplacian correction continues the particle with factor (M+V)/(f q); a
// monomial event spawns value/derivative descendants restarted with a
// fresh sigma schedule.
EstimatorSample sample_unbiased_nonlinear(const ProblemSpec& problem, double t, double x,
                                          const EventDistribution& events,
                                          const SigmaSchedule& schedule,
                                          const LifetimeParams& params,
                                          const EstimatorOptions& opts, RngStream& rng);

}  // namespace rsmc
