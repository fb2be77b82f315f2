#include "rsmc/mesh.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rsmc/errors.hpp"

namespace rsmc {

void validate_schedule(const SigmaSchedule& schedule, bool unsafe_variance) {
    if (!(schedule.sigma0 > 0.0)) {
        throw ConfigError("sigma0 must be positive");
    }
    if (schedule.n > -1.0 && !unsafe_variance) {
        std::ostringstream os;
        os << "sigma exponent n = " << schedule.n
           << " voids the variance guarantee (requires n <= -1); "
              "set unsafe_variance = true to override";
        throw ConfigError(os.str());
    }
}

TimeMesh build_mesh(double t, double T, const LifetimeParams& params, RngStream& rng) {
    if (!(t < T)) {
        throw std::domain_error("build_mesh: need t < T");
    }
    TimeMesh mesh;
    mesh.t_start = t;
    mesh.t_end = T;
    mesh.times.push_back(t);
    double cur = t;
    for (;;) {
        const double tau = sample_lifetime(params, rng);
        if (cur + tau >= T) {
            mesh.times.push_back(T);
            break;
        }
        double next = cur + tau;
        if (next <= cur) next = std::nextafter(cur, T);  // underflow guard
        mesh.times.push_back(next);
        cur = next;
    }
    mesh.n_switches = static_cast<int>(mesh.times.size()) - 2;
    mesh.increments.resize(mesh.times.size() - 1);
    for (std::size_t k = 0; k + 1 < mesh.times.size(); ++k) {
        mesh.increments[k] = mesh.times[k + 1] - mesh.times[k];
    }
    return mesh;
}

double sigma_at(const SigmaSchedule& schedule, const TimeMesh& mesh, std::size_t leg) {
    if (leg < 1 || leg > mesh.n_legs()) {
        throw std::domain_error("sigma_at: leg index out of range");
    }
    double log_sigma = std::log(schedule.sigma0);
    for (std::size_t i = 0; i + 1 < leg; ++i) {
        log_sigma += schedule.n * std::log(mesh.increments[i]);
    }
    return std::exp(log_sigma);
}

PathSample evolve_path(const TimeMesh& mesh, const DriftFn& drift,
                       const SigmaSchedule& schedule, double x0, RngStream& rng) {
    PathSample path;
    path.mesh = mesh;
    const std::size_t n_legs = mesh.n_legs();
    path.x.reserve(n_legs + 1);
    path.dw.reserve(n_legs);
    path.sigma_legs.reserve(n_legs);
    path.log_sigma_legs.reserve(n_legs);

    path.x.push_back(x0);
    double log_sigma = std::log(schedule.sigma0);
    for (std::size_t k = 0; k < n_legs; ++k) {
        const double dt = mesh.increments[k];
        const double sigma = std::exp(log_sigma);
        const double dw = sample_gaussian_increment(rng, dt);
        const double b_left = drift(mesh.times[k]);
        if (!std::isfinite(b_left)) {
            throw std::domain_error("evolve_path: drift evaluated to a non-finite value");
        }
        const double cv = path.x.back() + b_left * dt;
        const double x_next = cv + sigma * dw;
        path.dw.push_back(dw);
        path.sigma_legs.push_back(sigma);
        path.log_sigma_legs.push_back(log_sigma);
        path.x.push_back(x_next);
        if (k + 1 == n_legs) {
            path.cv_point = cv;
            path.x_hat_terminal = cv - sigma * dw;
        }
        if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(x_next)) {
            path.finite_ok = false;
        }
        log_sigma += schedule.n * std::log(dt);
    }
    return path;
}

}  // namespace rsmc
