#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "rsmc/distributions.hpp"
#include "rsmc/rng.hpp"

namespace rsmc {

// Stochastic switching mesh t = T_0 < ... < T_{N+1} = T built from i.i.d.
// Gamma lifetimes truncated at the horizon.  increments[k] = T_{k+1} - T_k,
// so leg k (1-based) has length increments[k-1].
struct TimeMesh {
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<double> times;
    std::vector<double> increments;
    int n_switches = 0;

    std::size_t n_legs() const { return increments.size(); }
};

// Mesh-dependent diffusion coefficient: leg k carries
//   sigma_k = sigma0 * prod_{i<k} (DT_i)^n,
// the empty product being 1.  The default n = -1 is required for the
// variance guarantee; n > -1 needs the unsafe-variance flag.
struct SigmaSchedule {
    double sigma0 = 1.0;
    double n = -1.0;
};

void validate_schedule(const SigmaSchedule& schedule, bool unsafe_variance);

// Builds the mesh by accumulating lifetimes; a lifetime reaching past the
// horizon truncates there.  Throws std::domain_error if t >= T.
TimeMesh build_mesh(double t, double T, const LifetimeParams& params, RngStream& rng);

// Sigma of leg k (1-based, legs are the half-open intervals (T_{k-1}, T_k]).
double sigma_at(const SigmaSchedule& schedule, const TimeMesh& mesh, std::size_t leg);

// Frozen-coefficient Euler path over a mesh.  The recursion
//   X_{T_k} = X_{T_{k-1}} + b(T_{k-1}) DT_k + sigma_k DW_k
// is the exact law of the leg, not an approximation.  x_hat_terminal flips
// the sign of the final Brownian increment only; cv_point is the
// drift-only terminal point used as control variate.
struct PathSample {
    TimeMesh mesh;
    std::vector<double> x;               // X_{T_0} .. X_{T_{N+1}}
    std::vector<double> dw;              // DW_1 .. DW_{N+1}
    std::vector<double> sigma_legs;      // sigma_1 .. sigma_{N+1}
    std::vector<double> log_sigma_legs;  // log of the above (overflow-safe route)
    double x_hat_terminal = 0.0;
    double cv_point = 0.0;
    bool finite_ok = true;  // false marks a poisoned path (sigma overflow etc.)
};

using DriftFn = std::function<double(double)>;

PathSample evolve_path(const TimeMesh& mesh, const DriftFn& drift,
                       const SigmaSchedule& schedule, double x0, RngStream& rng);

}  // namespace rsmc
