#include "rsmc/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rsmc/errors.hpp"
#include "rsmc/expression.hpp"

namespace rsmc {

namespace {

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double b,
                     double fa, double fm, double fb, double whole, double tol,
                     int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = simpson(a, b, fa, fm, fb);
    return adaptive_step(f, a, b, fa, fm, fb, whole, tol, 50);
}

std::vector<std::string> builtin_problem_names() {
    return {"paper-linear", "paper-nonlinear", "const-linear"};
}

bool is_builtin_problem(const std::string& name) {
    const auto names = builtin_problem_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

ProblemSpec make_builtin_problem(const std::string& name) {
    ProblemSpec p;
    p.name = name;
    if (name == "paper-linear") {
        // dv/dt + dv/dx = 0, v(1,x) = 10 cos(x-6); v(t,x) = 10 cos(x-t-5).
        p.drift = [](double) { return 1.0; };
        p.drift_expr = "1";
        p.terminal = [](double y) { return 10.0 * std::cos(y - 6.0); };
        p.terminal_d1 = [](double y) { return -10.0 * std::sin(y - 6.0); };
        p.terminal_d2 = [](double y) { return -10.0 * std::cos(y - 6.0); };
        p.terminal_expr = "10*cos(x-6)";
        p.t_start = 0.0;
        p.t_end = 1.0;
        p.analytic = [](double t, double x) { return 10.0 * std::cos(x - t - 5.0); };
        p.has_analytic = true;
        p.cosine_terminal = {{10.0, -6.0}};
        p.default_eval_t = 0.0;
        p.default_eval_x = 10.0;
        p.working_interval = {{0.0, 20.0}};
        p.baseline_sigma0 = 0.1;
        p.schedule_sigma0 = 0.1;
        return p;
    }
    if (name == "paper-nonlinear") {
        // dv/dt + dv/dx + (1/10)((dv/dx)^2 + v^2 - 1) = 0, v(1,x) = cos(1-x);
        // v(t,x) = cos(t-x).
        p.drift = [](double) { return 1.0; };
        p.drift_expr = "1";
        p.terminal = [](double y) { return std::cos(1.0 - y); };
        p.terminal_d1 = [](double y) { return std::sin(1.0 - y); };
        p.terminal_d2 = [](double y) { return -std::cos(1.0 - y); };
        p.terminal_expr = "cos(1-x)";
        p.t_start = 0.0;
        p.t_end = 1.0;
        p.nonlinearity = {{0.1, 0, 2}, {0.1, 2, 0}, {-0.1, 0, 0}};
        p.analytic = [](double t, double x) { return std::cos(t - x); };
        p.has_analytic = true;
        p.cosine_terminal = {{1.0, -1.0}};  // cos(1-x) = cos(x-1)
        p.default_eval_t = 0.0;
        p.default_eval_x = 1.0;
        p.working_interval = {{-5.0, 7.0}};
        p.baseline_sigma0 = 1.0;
        p.schedule_sigma0 = 0.45;
        return p;
    }
    if (name == "const-linear") {
        // dv/dt + dv/dx = 0 with identity terminal; v(t,x) = x + (T-t).
        p.drift = [](double) { return 1.0; };
        p.drift_expr = "1";
        p.terminal = [](double y) { return y; };
        p.terminal_d1 = [](double) { return 1.0; };
        p.terminal_d2 = [](double) { return 0.0; };
        p.terminal_expr = "x";
        p.t_start = 0.0;
        p.t_end = 1.0;
        p.analytic = [](double t, double x) { return x + (1.0 - t); };
        p.has_analytic = true;
        p.default_eval_t = 0.0;
        p.default_eval_x = 10.0;
        p.working_interval = {{0.0, 20.0}};
        p.baseline_sigma0 = 0.1;
        p.schedule_sigma0 = 0.1;
        return p;
    }
    throw ConfigError("unknown built-in problem \"" + name + "\"");
}

ProblemSpec make_expression_problem(const std::string& drift_expr,
                                    const std::string& terminal_expr,
                                    const std::string& terminal_d1_expr,
                                    const std::string& terminal_d2_expr,
                                    double t_start, double t_end,
                                    const std::vector<Monomial>& nonlinearity) {
    if (!(t_start < t_end)) {
        throw ConfigError("problem horizon needs t_start < t_end");
    }
    ProblemSpec p;
    p.name = "custom";
    const Expression b = Expression::parse(drift_expr);
    p.drift = [b](double t) { return b.eval(t, 0.0); };
    p.drift_expr = drift_expr;
    const Expression g = Expression::parse(terminal_expr);
    p.terminal = [g](double y) { return g.eval(0.0, y); };
    p.terminal_expr = terminal_expr;
    if (!terminal_d1_expr.empty()) {
        const Expression g1 = Expression::parse(terminal_d1_expr);
        p.terminal_d1 = [g1](double y) { return g1.eval(0.0, y); };
    } else {
        auto gf = p.terminal;
        p.terminal_d1 = [gf](double y) {
            const double h = 1e-6;
            return (gf(y + h) - gf(y - h)) / (2.0 * h);
        };
        p.numeric_derivatives = true;
    }
    if (!terminal_d2_expr.empty()) {
        const Expression g2 = Expression::parse(terminal_d2_expr);
        p.terminal_d2 = [g2](double y) { return g2.eval(0.0, y); };
    } else {
        auto gf = p.terminal;
        p.terminal_d2 = [gf](double y) {
            const double h = 1e-5;
            return (gf(y + h) - 2.0 * gf(y) + gf(y - h)) / (h * h);
        };
        p.numeric_derivatives = true;
    }
    p.t_start = t_start;
    p.t_end = t_end;
    p.default_eval_t = t_start;
    p.nonlinearity = nonlinearity;
    return p;
}

double drift_integral(const ProblemSpec& problem, double t, double T) {
    return integrate_adaptive(problem.drift, t, T, 1e-12);
}

double characteristics_solution(const ProblemSpec& problem, double t, double x) {
    if (!problem.is_linear()) {
        throw UnsupportedProblemError(
            "characteristics_solution: problem has a nonlinearity");
    }
    return problem.terminal(x + drift_integral(problem, t, problem.t_end));
}

double perturbed_closed_form(const ProblemSpec& problem, double sigma0, double t, double x) {
    if (!problem.is_linear()) {
        throw UnsupportedProblemError("perturbed_closed_form: problem has a nonlinearity");
    }
    if (!problem.cosine_terminal) {
        throw UnsupportedProblemError(
            "perturbed_closed_form: terminal is not of the form A*cos(x + phase)");
    }
    const auto [amp, phase] = *problem.cosine_terminal;
    const double horizon = problem.t_end - t;
    const double shift = drift_integral(problem, t, problem.t_end);
    return amp * std::exp(-0.5 * sigma0 * sigma0 * horizon) * std::cos(x + shift + phase);
}

double analytic_nonlinear_solution(double t, double x) {
    return std::cos(t - x);
}

std::string ProblemDiagnostics::summary() const {
    std::ostringstream os;
    os << "drift Lipschitz ~ " << drift_lipschitz
       << "; |g| <= " << g_bound << ", |g'| <= " << g1_bound << ", |g''| <= " << g2_bound;
    if (unbounded_g_warning) os << " [warning: terminal appears unbounded]";
    if (numeric_derivative_warning) os << " [warning: numeric terminal derivatives]";
    if (has_residual) os << "; PDE residual max " << pde_residual_max;
    return os.str();
}

ProblemDiagnostics validate_problem(const ProblemSpec& problem) {
    ProblemDiagnostics diag;
    diag.numeric_derivative_warning = problem.numeric_derivatives;

    const int n_grid = 200;
    const double dt_grid = (problem.t_end - problem.t_start) / n_grid;
    for (int i = 0; i < n_grid; ++i) {
        const double t0 = problem.t_start + i * dt_grid;
        const double t1 = t0 + dt_grid;
        const double quot = std::fabs(problem.drift(t1) - problem.drift(t0)) / dt_grid;
        diag.drift_lipschitz = std::max(diag.drift_lipschitz, quot);
    }

    double lo;
    double hi;
    if (problem.working_interval) {
        lo = problem.working_interval->first;
        hi = problem.working_interval->second;
    } else {
        lo = -1000.0;
        hi = 1000.0;
    }
    for (int i = 0; i <= n_grid; ++i) {
        const double y = lo + (hi - lo) * i / n_grid;
        diag.g_bound = std::max(diag.g_bound, std::fabs(problem.terminal(y)));
        if (problem.terminal_d1) {
            diag.g1_bound = std::max(diag.g1_bound, std::fabs(problem.terminal_d1(y)));
        }
        if (problem.terminal_d2) {
            diag.g2_bound = std::max(diag.g2_bound, std::fabs(problem.terminal_d2(y)));
        }
    }
    if (!problem.working_interval) {
        // no declared interval: flag growth at the far samples
        const double inner = std::fabs(problem.terminal(100.0)) +
                             std::fabs(problem.terminal(-100.0));
        const double outer = std::fabs(problem.terminal(1000.0)) +
                             std::fabs(problem.terminal(-1000.0));
        if (outer > 2.0 * inner && outer > 100.0) diag.unbounded_g_warning = true;
    } else if (diag.g_bound > 1e6) {
        diag.unbounded_g_warning = true;
    }

    if (problem.has_analytic) {
        diag.has_residual = true;
        const double h = 1e-5;
        const double x_lo = problem.working_interval ? problem.working_interval->first : -5.0;
        const double x_hi = problem.working_interval ? problem.working_interval->second : 5.0;
        const int n = 50;
        for (int i = 1; i < n; ++i) {
            const double t = problem.t_start +
                             (problem.t_end - problem.t_start) * i / n;
            for (int j = 1; j < n; ++j) {
                const double x = x_lo + (x_hi - x_lo) * j / n;
                const auto& v = problem.analytic;
                const double vt = (v(t + h, x) - v(t - h, x)) / (2.0 * h);
                const double vx = (v(t, x + h) - v(t, x - h)) / (2.0 * h);
                double residual = vt + problem.drift(t) * vx;
                for (const Monomial& m : problem.nonlinearity) {
                    residual += m.coeff * std::pow(v(t, x), m.v_power) *
                                std::pow(vx, m.dv_power);
                }
                diag.pde_residual_max = std::max(diag.pde_residual_max, std::fabs(residual));
            }
        }
    }
    return diag;
}

}  // namespace rsmc
