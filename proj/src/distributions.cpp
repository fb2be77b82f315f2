#include "rsmc/distributions.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "rsmc/errors.hpp"

namespace rsmc {

void validate_lifetimes(const LifetimeParams& params, bool unsafe_variance) {
    if (!(params.kappa > 0.0) || !(params.eta > 0.0)) {
        std::ostringstream os;
        os << "lifetime parameters must be positive (kappa=" << params.kappa
           << ", eta=" << params.eta << ")";
        throw ConfigError(os.str());
    }
    if (params.kappa != 0.5 && !unsafe_variance) {
        std::ostringstream os;
        os << "kappa = " << params.kappa
           << " voids the variance guarantee (requires kappa = 1/2); "
              "set unsafe_variance = true to override";
        throw ConfigError(os.str());
    }
}

namespace {

// Marsaglia & Tsang (2000), with the usual power boost for shape < 1.
double sample_gamma_shape(double alpha, RngStream& rng) {
    if (alpha < 1.0) {
        const double u = rng.uniform01();
        return sample_gamma_shape(alpha + 1.0, rng) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform01();
        if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

}  // namespace

double sample_lifetime(const LifetimeParams& params, RngStream& rng) {
    if (!(params.kappa > 0.0) || !(params.eta > 0.0)) {
        throw ConfigError("sample_lifetime: invalid parameters");
    }
    if (params.kappa == 0.5) {
        const double z = rng.normal();
        const double tau = 0.5 * params.eta * z * z;
        // z == 0 has probability zero but subnormal squares can flush to 0
        return tau > 0.0 ? tau : 5e-324;
    }
    return params.eta * sample_gamma_shape(params.kappa, rng);
}

double lifetime_density(const LifetimeParams& params, double s) {
    if (!(s > 0.0)) {
        throw std::domain_error("lifetime_density: s must be positive");
    }
    const double log_f = (params.kappa - 1.0) * std::log(s) - s / params.eta -
                         std::lgamma(params.kappa) - params.kappa * std::log(params.eta);
    return std::exp(log_f);
}

double lifetime_survival(const LifetimeParams& params, double s) {
    if (s < 0.0) {
        throw std::domain_error("lifetime_survival: s must be nonnegative");
    }
    if (s == 0.0) return 1.0;
    if (params.kappa == 0.5) {
        return std::erfc(std::sqrt(s / params.eta));
    }
    return boost::math::gamma_q(params.kappa, s / params.eta);
}

double sample_gaussian_increment(RngStream& rng, double dt) {
    if (!(dt > 0.0)) {
        throw std::domain_error("sample_gaussian_increment: dt must be positive");
    }
    return rng.normal() * std::sqrt(dt);
}

}  // namespace rsmc
