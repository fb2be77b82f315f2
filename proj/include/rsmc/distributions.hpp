#pragma once

#include "rsmc/rng.hpp"

namespace rsmc {

// Gamma lifetime law tau ~ Gamma(kappa, eta), density
//   f(s) = s^(kappa-1) exp(-s/eta) / (Gamma(kappa) eta^kappa),  s > 0.
// The default kappa = 1/2 is required for the variance guarantees of the
// switching estimator; other shapes need the unsafe-variance flag.
struct LifetimeParams {
    double kappa = 0.5;
    double eta = 2.0;
};

// Throws ConfigError for non-positive parameters, or for kappa != 1/2
// without the unsafe flag.
void validate_lifetimes(const LifetimeParams& params, bool unsafe_variance);

// One lifetime draw.  kappa = 1/2 uses the exact squared-normal identity
// tau = (eta/2) Z^2; other shapes use Marsaglia-Tsang.
double sample_lifetime(const LifetimeParams& params, RngStream& rng);

// Density f(s); throws std::domain_error for s <= 0 (weight denominators
// must never be evaluated at zero).
double lifetime_density(const LifetimeParams& params, double s);

// Survival F(s) = P[tau >= s]; erfc fast path for kappa = 1/2, regularized
// upper incomplete gamma otherwise.  Throws std::domain_error for s < 0.
double lifetime_survival(const LifetimeParams& params, double s);

// Brownian increment over a step of length dt: Normal(0, dt).
double sample_gaussian_increment(RngStream& rng, double dt);

}  // namespace rsmc
