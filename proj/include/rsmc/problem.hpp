#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rsmc {

// One term c * v^a (Dv)^b of a polynomial nonlinearity.
struct Monomial {
    double coeff = 0.0;
    int v_power = 0;
    int dv_power = 0;
};

// A terminal-value transport problem
//   dv/dt + b(t) dv/dx + sum_j c_j v^a_j (dv/dx)^b_j = 0,  v(T, x) = g(x).
struct ProblemSpec {
    std::string name = "custom";

    std::function<double(double)> drift;  // b(t), time only
    std::string drift_expr;

    std::function<double(double)> terminal;  // g
    std::function<double(double)> terminal_d1;
    std::function<double(double)> terminal_d2;
    std::string terminal_expr;
    bool numeric_derivatives = false;  // d1/d2 formed by central differences

    double t_start = 0.0;
    double t_end = 1.0;

    std::vector<Monomial> nonlinearity;

    std::function<double(double, double)> analytic;  // v(t,x) when known
    bool has_analytic = false;

    // Set when g(x) = A cos(x + phase); enables the perturbed closed form.
    std::optional<std::pair<double, double>> cosine_terminal;

    double default_eval_t = 0.0;
    double default_eval_x = 0.0;

    // Interval on which boundedness/Lipschitz diagnostics are sampled;
    // unset means the problem made no boundedness claim.
    std::optional<std::pair<double, double>> working_interval;

    // Baked-in estimator parameters for built-ins.
    double baseline_sigma0 = 0.1;  // Laplacian perturbation strength
    double schedule_sigma0 = 0.1;  // sigma0 of the switching schedule

    bool is_linear() const { return nonlinearity.empty(); }
};

std::vector<std::string> builtin_problem_names();
bool is_builtin_problem(const std::string& name);
ProblemSpec make_builtin_problem(const std::string& name);  // throws ConfigError

// Builds a custom problem from expression strings; derivative expressions
// are optional (central differences otherwise).
ProblemSpec make_expression_problem(const std::string& drift_expr,
                                    const std::string& terminal_expr,
                                    const std::string& terminal_d1_expr,
                                    const std::string& terminal_d2_expr,
                                    double t_start, double t_end,
                                    const std::vector<Monomial>& nonlinearity);

// integral of b over [t, T] by adaptive Simpson quadrature (tol 1e-12).
double drift_integral(const ProblemSpec& problem, double t, double T);

// Deterministic characteristics value g(x + int_t^T b) for linear problems.
// Throws UnsupportedProblemError if a nonlinearity is present.
double characteristics_solution(const ProblemSpec& problem, double t, double x);

// Closed-form solution of the Laplacian-perturbed linear problem for
// cosine terminals: A exp(-sigma0^2 (T-t)/2) cos(x + int_t^T b + phase).
double perturbed_closed_form(const ProblemSpec& problem, double sigma0, double t, double x);

// cos(t - x), the reference solution of the built-in nonlinear example.
double analytic_nonlinear_solution(double t, double x);

struct ProblemDiagnostics {
    double drift_lipschitz = 0.0;  // sampled difference-quotient bound
    double g_bound = 0.0;
    double g1_bound = 0.0;
    double g2_bound = 0.0;
    bool unbounded_g_warning = false;
    bool numeric_derivative_warning = false;
    double pde_residual_max = 0.0;  // analytic solution vs PDE, finite differences
    bool has_residual = false;

    std::string summary() const;
};

// Sampled Lipschitz/boundedness estimates and a finite-difference residual
// check of the analytic solution (report only, never throws on findings).
ProblemDiagnostics validate_problem(const ProblemSpec& problem);

// Adaptive Simpson integration helper (exposed for tests and oracles).
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol);

}  // namespace rsmc
