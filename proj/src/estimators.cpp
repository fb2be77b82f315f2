#include "rsmc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "rsmc/errors.hpp"
#include "rsmc/weights.hpp"

namespace rsmc {

EventDistribution EventDistribution::uniform_with_correction(const ProblemSpec& problem) {
    EventDistribution ev;
    const std::size_t kinds = problem.nonlinearity.size() + 1;
    ev.q_correction = 1.0 / static_cast<double>(kinds);
    ev.q_monomials.assign(problem.nonlinearity.size(), 1.0 / static_cast<double>(kinds));
    return ev;
}

EventDistribution EventDistribution::uniform_monomials(const ProblemSpec& problem) {
    EventDistribution ev;
    ev.q_correction = 0.0;
    if (!problem.nonlinearity.empty()) {
        ev.q_monomials.assign(problem.nonlinearity.size(),
                              1.0 / static_cast<double>(problem.nonlinearity.size()));
    }
    return ev;
}

void EventDistribution::validate(const ProblemSpec& problem, bool need_correction) const {
    if (q_monomials.size() != problem.nonlinearity.size()) {
        throw ConfigError("event distribution does not match the problem's monomials");
    }
    double total = q_correction;
    for (double q : q_monomials) {
        if (!(q > 0.0)) {
            throw ConfigError("event distribution must be strictly positive on every monomial");
        }
        total += q;
    }
    if (need_correction && !(q_correction > 0.0)) {
        throw ConfigError("event distribution needs positive correction probability");
    }
    if (problem.nonlinearity.empty() && !need_correction) return;  // nothing to fire
    if (std::fabs(total - 1.0) > 1e-12) {
        throw ConfigError("event probabilities must sum to 1");
    }
}

namespace {

void require_linear(const ProblemSpec& problem, const char* who) {
    if (!problem.is_linear()) {
        throw ConfigError(std::string(who) + ": problem has a nonlinearity");
    }
}

// beta and the running product of switch factors for a path with >= 1 switch.
struct TransportParts {
    WeightProduct prod;
    double beta = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double max_abs_p = 0.0;
};

TransportParts transport_parts(const PathSample& path, const ProblemSpec& problem,
                               const LifetimeParams& params, const EstimatorOptions& opts) {
    TransportParts parts;
    const TimeMesh& mesh = path.mesh;
    const std::size_t nt = static_cast<std::size_t>(mesh.n_switches);
    const auto& inc = mesh.increments;
    const auto& b = problem.drift;

    for (std::size_t k = 2; k <= nt; ++k) {
        const std::size_t leg = k - 1;  // 0-based leg carrying the weights
        const double db = b(mesh.times[k - 1]) - b(mesh.times[k - 2]);
        const double m = factor_m(db, path.sigma_legs[leg], path.dw[leg], inc[leg]);
        const double v = opts.v_scale * factor_v(path.sigma_legs[leg - 1], path.sigma_legs[leg],
                                                 path.dw[leg], inc[leg]);
        const double p = switch_factor_p(m, v, lifetime_density(params, inc[leg - 1]));
        parts.prod.accumulate(p);
        parts.max_abs_p = std::max(parts.max_abs_p, std::fabs(p));
    }

    const std::size_t leg = nt;  // terminal leg, 0-based
    const double db = b(mesh.times[nt]) - b(mesh.times[nt - 1]);
    const double m = factor_m(db, path.sigma_legs[leg], path.dw[leg], inc[leg]);
    const double v = opts.v_scale * factor_v(path.sigma_legs[leg - 1], path.sigma_legs[leg],
                                             path.dw[leg], inc[leg]);
    const auto& g = problem.terminal;
    const double dg = g(path.x.back()) - g(path.cv_point);
    const double dgh = g(path.x_hat_terminal) - g(path.cv_point);
    const double denom = lifetime_survival(params, inc[leg]) *
                         lifetime_density(params, inc[leg - 1]);
    parts.beta1 = dg * (m + v) / denom;
    parts.beta2 = dgh * (-m + v) / denom;
    parts.beta = 0.5 * (parts.beta1 + parts.beta2);
    return parts;
}

}  // namespace

EstimatorSample evaluate_transport(const PathSample& path, const ProblemSpec& problem,
                                   const SigmaSchedule& /*schedule*/,
                                   const LifetimeParams& params,
                                   const EstimatorOptions& opts) {
    require_linear(problem, "evaluate_transport");
    EstimatorSample sample;
    sample.n_switches = path.mesh.n_switches;
    if (!path.finite_ok) {
        sample.poisoned = true;
        return sample;
    }
    if (path.mesh.n_switches == 0) {
        sample.value = problem.terminal(path.x[1]) /
                       lifetime_survival(params, path.mesh.increments[0]);
    } else {
        const TransportParts parts = transport_parts(path, problem, params, opts);
        sample.beta1 = parts.beta1;
        sample.beta2 = parts.beta2;
        sample.max_abs_p = parts.max_abs_p;
        sample.value = parts.beta * parts.prod.value(&sample.used_log_path);
    }
    if (!std::isfinite(sample.value)) {
        sample.poisoned = true;
        sample.value = 0.0;
    }
    return sample;
}

EstimatorSample sample_unbiased_transport(const ProblemSpec& problem, double t, double x,
                                          const SigmaSchedule& schedule,
                                          const LifetimeParams& params,
                                          const EstimatorOptions& opts, RngStream& rng) {
    const TimeMesh mesh = build_mesh(t, problem.t_end, params, rng);
    const PathSample path = evolve_path(mesh, problem.drift, schedule, x, rng);
    return evaluate_transport(path, problem, schedule, params, opts);
}

EstimatorSample evaluate_derivative(const PathSample& path, int order,
                                    const ProblemSpec& problem,
                                    const SigmaSchedule& /*schedule*/,
                                    const LifetimeParams& params,
                                    const EstimatorOptions& opts) {
    require_linear(problem, "evaluate_derivative");
    if (order != 1 && order != 2) {
        throw std::domain_error("evaluate_derivative: order must be 1 or 2");
    }
    EstimatorSample sample;
    sample.n_switches = path.mesh.n_switches;
    if (!path.finite_ok) {
        sample.poisoned = true;
        return sample;
    }
    const double dt1 = path.mesh.increments[0];
    const double w = order == 1 ? weight_w1(path.sigma_legs[0], path.dw[0], dt1)
                                : weight_w2(path.sigma_legs[0], path.dw[0], dt1);
    if (path.mesh.n_switches == 0) {
        const auto& g = problem.terminal;
        const double surv = lifetime_survival(params, dt1);
        const double phi =
            order == 1
                ? (g(path.x[1]) - g(path.x_hat_terminal)) / (2.0 * surv)
                : (g(path.x[1]) + g(path.x_hat_terminal) - 2.0 * g(path.cv_point)) /
                      (2.0 * surv);
        sample.value = phi * w;
    } else {
        const TransportParts parts = transport_parts(path, problem, params, opts);
        sample.beta1 = parts.beta1;
        sample.beta2 = parts.beta2;
        sample.max_abs_p = parts.max_abs_p;
        sample.value = parts.beta * parts.prod.value(&sample.used_log_path) * w;
    }
    if (!std::isfinite(sample.value)) {
        sample.poisoned = true;
        sample.value = 0.0;
    }
    return sample;
}

EstimatorSample sample_derivative_estimate(const ProblemSpec& problem, double t, double x,
                                           int order, const SigmaSchedule& schedule,
                                           const LifetimeParams& params,
                                           const EstimatorOptions& opts, RngStream& rng) {
    const TimeMesh mesh = build_mesh(t, problem.t_end, params, rng);
    const PathSample path = evolve_path(mesh, problem.drift, schedule, x, rng);
    return evaluate_derivative(path, order, problem, schedule, params, opts);
}

EstimatorSample sample_perturbed_linear(const ProblemSpec& problem, double t, double x,
                                        double sigma0, RngStream& rng) {
    require_linear(problem, "sample_perturbed_linear");
    EstimatorSample sample;
    const double horizon = problem.t_end - t;
    const double shift = drift_integral(problem, t, problem.t_end);
    const double z = rng.normal();
    sample.value = problem.terminal(x + shift + sigma0 * std::sqrt(horizon) * z);
    if (!std::isfinite(sample.value)) {
        sample.poisoned = true;
        sample.value = 0.0;
    }
    return sample;
}

// ------------------------- branching estimators -------------------------

namespace {

struct BranchContext {
    const ProblemSpec& problem;
    const EventDistribution& events;
    const LifetimeParams& params;
    const EstimatorOptions& opts;
    RngStream& rng;
    bool poisoned = false;
    int events_fired = 0;
    double max_abs_factor = 0.0;

    void note_factor(double f) { max_abs_factor = std::max(max_abs_factor, std::fabs(f)); }
};

// Picks an event kind: -1 for the correction, otherwise the monomial index.
int pick_event(BranchContext& ctx, bool with_correction, double* q_out) {
    double u = ctx.rng.uniform01();
    if (with_correction) {
        if (u < ctx.events.q_correction) {
            *q_out = ctx.events.q_correction;
            return -1;
        }
        u -= ctx.events.q_correction;
    }
    const auto& qs = ctx.events.q_monomials;
    for (std::size_t j = 0; j + 1 < qs.size(); ++j) {
        if (u < qs[j]) {
            *q_out = qs[j];
            return static_cast<int>(j);
        }
        u -= qs[j];
    }
    *q_out = qs.back();
    return static_cast<int>(qs.size()) - 1;
}

// ---- biased semilinear branching (constant sigma0 diffusion) ----

double branch_value(BranchContext& ctx, double sigma0, double s, double y, int depth);
double branch_deriv(BranchContext& ctx, double sigma0, double s, double y, int depth);

double branch_monomial(BranchContext& ctx, double sigma0, const Monomial& mono, double q,
                       double f_dt, double s, double y, int depth) {
    ++ctx.events_fired;
    double w = mono.coeff / (f_dt * q);
    ctx.note_factor(w);
    for (int i = 0; i < mono.v_power && !ctx.poisoned; ++i) {
        w *= branch_value(ctx, sigma0, s, y, depth + 1);
    }
    for (int i = 0; i < mono.dv_power && !ctx.poisoned; ++i) {
        w *= branch_deriv(ctx, sigma0, s, y, depth + 1);
    }
    return w;
}

double branch_value(BranchContext& ctx, double sigma0, double s, double y, int depth) {
    if (depth > ctx.opts.depth_cap) {
        ctx.poisoned = true;
        return 0.0;
    }
    const double T = ctx.problem.t_end;
    if (ctx.problem.is_linear()) {  // no events can fire: plain diffusion payoff
        const double z = ctx.rng.normal();
        const double shift = drift_integral(ctx.problem, s, T);
        return ctx.problem.terminal(y + shift + sigma0 * std::sqrt(T - s) * z);
    }
    const double tau = sample_lifetime(ctx.params, ctx.rng);
    const bool survives = s + tau >= T;
    const double dt = survives ? T - s : tau;
    const double dw = sample_gaussian_increment(ctx.rng, dt);
    const double xn = y + drift_integral(ctx.problem, s, s + dt) + sigma0 * dw;
    if (survives) {
        return ctx.problem.terminal(xn) / lifetime_survival(ctx.params, dt);
    }
    double q = 0.0;
    const int j = pick_event(ctx, /*with_correction=*/false, &q);
    return branch_monomial(ctx, sigma0, ctx.problem.nonlinearity[static_cast<std::size_t>(j)],
                           q, lifetime_density(ctx.params, dt), s + dt, xn, depth);
}

double branch_deriv(BranchContext& ctx, double sigma0, double s, double y, int depth) {
    if (depth > ctx.opts.depth_cap) {
        ctx.poisoned = true;
        return 0.0;
    }
    const double T = ctx.problem.t_end;
    const double tau = sample_lifetime(ctx.params, ctx.rng);
    const bool survives = s + tau >= T;
    const double dt = survives ? T - s : tau;
    const double dw = sample_gaussian_increment(ctx.rng, dt);
    const double shift = drift_integral(ctx.problem, s, s + dt);
    const double xn = y + shift + sigma0 * dw;
    const double w1 = weight_w1(sigma0, dw, dt);
    if (survives) {
        const double xh = y + shift - sigma0 * dw;
        const auto& g = ctx.problem.terminal;
        return (g(xn) - g(xh)) / (2.0 * lifetime_survival(ctx.params, dt)) * w1;
    }
    double q = 0.0;
    const int j = pick_event(ctx, /*with_correction=*/false, &q);
    const double cont =
        branch_monomial(ctx, sigma0, ctx.problem.nonlinearity[static_cast<std::size_t>(j)], q,
                        lifetime_density(ctx.params, dt), s + dt, xn, depth);
    return cont * w1;
}

// ---- unbiased regime-switching nonlinear estimator ----

struct NlSchedule {
    double log_sigma;       // sigma of the upcoming leg
    bool pending;           // a correction factor waits for the upcoming leg
    double db_prev = 0.0;   // drift mismatch of the pending switch
    double log_sigma_prev = 0.0;
    double dt_prev = 0.0;   // increment ending at the pending switch
};

double nl_value(BranchContext& ctx, const SigmaSchedule& schedule, double s, double y,
                int depth);
double nl_deriv(BranchContext& ctx, const SigmaSchedule& schedule, double s, double y,
                int depth);

double nl_loop(BranchContext& ctx, const SigmaSchedule& schedule, double t, double x,
               NlSchedule st, double weight, int depth) {
    const double T = ctx.problem.t_end;
    const auto& b = ctx.problem.drift;
    const auto& g = ctx.problem.terminal;
    for (;;) {
        const double tau = sample_lifetime(ctx.params, ctx.rng);
        const bool survives = t + tau >= T;
        const double dt = survives ? T - t : tau;
        const double dw = sample_gaussian_increment(ctx.rng, dt);
        const double sigma = std::exp(st.log_sigma);
        const double cv = x + b(t) * dt;
        const double xn = cv + sigma * dw;
        if (survives) {
            if (!st.pending) {
                return weight * g(xn) / lifetime_survival(ctx.params, dt);
            }
            const double m = factor_m(st.db_prev, sigma, dw, dt);
            const double v = ctx.opts.v_scale *
                             factor_v(std::exp(st.log_sigma_prev), sigma, dw, dt);
            const double dg = g(xn) - g(cv);
            const double dgh = g(cv - sigma * dw) - g(cv);
            const double denom = lifetime_survival(ctx.params, dt) *
                                 lifetime_density(ctx.params, st.dt_prev);
            const double beta = 0.5 * (dg * (m + v) + dgh * (-m + v)) / denom;
            return weight * beta;
        }
        if (st.pending) {
            const double m = factor_m(st.db_prev, sigma, dw, dt);
            const double v = ctx.opts.v_scale *
                             factor_v(std::exp(st.log_sigma_prev), sigma, dw, dt);
            const double p = (m + v) / lifetime_density(ctx.params, st.dt_prev);
            ctx.note_factor(p);
            weight *= p;
            st.pending = false;
        }
        double q = 0.0;
        const int j = pick_event(ctx, /*with_correction=*/true, &q);
        if (j < 0) {
            weight /= q;
            ++ctx.events_fired;
            st.db_prev = b(t + dt) - b(t);
            st.log_sigma_prev = st.log_sigma;
            st.dt_prev = dt;
            st.pending = true;
            st.log_sigma += schedule.n * std::log(dt);
            t += dt;
            x = xn;
            if (!std::isfinite(std::exp(st.log_sigma)) || !std::isfinite(weight)) {
                ctx.poisoned = true;
                return 0.0;
            }
            continue;
        }
        ++ctx.events_fired;
        const Monomial& mono = ctx.problem.nonlinearity[static_cast<std::size_t>(j)];
        weight *= mono.coeff / (lifetime_density(ctx.params, dt) * q);
        ctx.note_factor(weight);
        for (int i = 0; i < mono.v_power && !ctx.poisoned; ++i) {
            weight *= nl_value(ctx, schedule, t + dt, xn, depth + 1);
        }
        for (int i = 0; i < mono.dv_power && !ctx.poisoned; ++i) {
            weight *= nl_deriv(ctx, schedule, t + dt, xn, depth + 1);
        }
        return weight;
    }
}

double nl_value(BranchContext& ctx, const SigmaSchedule& schedule, double s, double y,
                int depth) {
    if (depth > ctx.opts.depth_cap) {
        ctx.poisoned = true;
        return 0.0;
    }
    NlSchedule st;
    st.log_sigma = std::log(schedule.sigma0);  // descendants restart the schedule
    st.pending = false;
    return nl_loop(ctx, schedule, s, y, st, 1.0, depth);
}

double nl_deriv(BranchContext& ctx, const SigmaSchedule& schedule, double s, double y,
                int depth) {
    if (depth > ctx.opts.depth_cap) {
        ctx.poisoned = true;
        return 0.0;
    }
    const double T = ctx.problem.t_end;
    const auto& b = ctx.problem.drift;
    const auto& g = ctx.problem.terminal;
    const double sigma0 = schedule.sigma0;
    const double tau = sample_lifetime(ctx.params, ctx.rng);
    const bool survives = s + tau >= T;
    const double dt = survives ? T - s : tau;
    const double dw = sample_gaussian_increment(ctx.rng, dt);
    const double cv = y + b(s) * dt;
    const double xn = cv + sigma0 * dw;
    const double w1 = weight_w1(sigma0, dw, dt);
    if (survives) {
        const double phi1 = (g(xn) - g(cv - sigma0 * dw)) /
                            (2.0 * lifetime_survival(ctx.params, dt));
        return phi1 * w1;
    }
    double q = 0.0;
    const int j = pick_event(ctx, /*with_correction=*/true, &q);
    if (j < 0) {
        ++ctx.events_fired;
        NlSchedule st;
        st.log_sigma = std::log(sigma0) + schedule.n * std::log(dt);
        st.pending = true;
        st.db_prev = b(s + dt) - b(s);
        st.log_sigma_prev = std::log(sigma0);
        st.dt_prev = dt;
        return nl_loop(ctx, schedule, s + dt, xn, st, 1.0 / q, depth) * w1;
    }
    ++ctx.events_fired;
    const Monomial& mono = ctx.problem.nonlinearity[static_cast<std::size_t>(j)];
    double w = mono.coeff / (lifetime_density(ctx.params, dt) * q);
    for (int i = 0; i < mono.v_power && !ctx.poisoned; ++i) {
        w *= nl_value(ctx, schedule, s + dt, xn, depth + 1);
    }
    for (int i = 0; i < mono.dv_power && !ctx.poisoned; ++i) {
        w *= nl_deriv(ctx, schedule, s + dt, xn, depth + 1);
    }
    return w * w1;
}

}  // namespace

EstimatorSample sample_branching_semilinear(const ProblemSpec& problem, double t, double x,
                                            double sigma0, const EventDistribution& events,
                                            const LifetimeParams& params,
                                            const EstimatorOptions& opts, RngStream& rng) {
    if (!(sigma0 > 0.0)) {
        throw ConfigError("sample_branching_semilinear: sigma0 must be positive");
    }
    events.validate(problem, /*need_correction=*/false);
    BranchContext ctx{problem, events, params, opts, rng};
    EstimatorSample sample;
    sample.value = branch_value(ctx, sigma0, t, x, 0);
    sample.n_switches = ctx.events_fired;
    sample.max_abs_p = ctx.max_abs_factor;
    if (ctx.poisoned || !std::isfinite(sample.value)) {
        sample.poisoned = true;
        sample.value = 0.0;
    }
    return sample;
}

EstimatorSample sample_unbiased_nonlinear(const ProblemSpec& problem, double t, double x,
                                          const EventDistribution& events,
                                          const SigmaSchedule& schedule,
                                          const LifetimeParams& params,
                                          const EstimatorOptions& opts, RngStream& rng) {
    events.validate(problem, /*need_correction=*/true);
    BranchContext ctx{problem, events, params, opts, rng};
    EstimatorSample sample;
    sample.value = nl_value(ctx, schedule, t, x, 0);
    sample.n_switches = ctx.events_fired;
    sample.max_abs_p = ctx.max_abs_factor;
    if (ctx.poisoned || !std::isfinite(sample.value)) {
        sample.poisoned = true;
        sample.value = 0.0;
    }
    return sample;
}

}  // namespace rsmc
