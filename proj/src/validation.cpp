#include "rsmc/validation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <vector>

#include "rsmc/config.hpp"
#include "rsmc/csv.hpp"
#include "rsmc/estimators.hpp"
#include "rsmc/montecarlo.hpp"
#include "rsmc/problem.hpp"
#include "rsmc/weights.hpp"

namespace rsmc {

namespace {

struct Suite {
    std::ostream& out;
    int failures = 0;

    void check(const char* name, bool ok, double observed, double bound) {
        out << (ok ? "PASS" : "FAIL") << "  " << name << "  (observed " << std::setprecision(6)
            << observed << ", bound " << bound << ")\n";
        if (!ok) ++failures;
    }
};

}  // namespace

int run_validation(bool quick, std::ostream& out) {
    Suite suite{out};
    const LifetimeParams lifetimes;  // kappa = 1/2, eta = 2
    const std::uint64_t n_draws = quick ? 100000 : 1000000;
    const std::uint64_t seed = 0xC0FFEE;

    {  // lifetime moments: mean kappa*eta, variance kappa*eta^2
        RngStream rng(seed, 1);
        StreamingStats stats;
        for (std::uint64_t i = 0; i < n_draws; ++i) {
            stats.push(sample_lifetime(lifetimes, rng));
        }
        const double mean_err = std::fabs(stats.mean - 1.0);
        const double var_err = std::fabs(stats.variance() - 2.0);
        suite.check("lifetime mean = kappa*eta", mean_err < 0.01 * std::sqrt(1e6 / n_draws),
                    stats.mean, 1.0);
        suite.check("lifetime variance = kappa*eta^2",
                    var_err < 0.05 * std::sqrt(1e6 / n_draws), stats.variance(), 2.0);
    }

    {  // Kolmogorov-Smirnov against the analytic CDF at the 1% level
        RngStream rng(seed, 2);
        const std::size_t n = quick ? 20000 : 100000;
        std::vector<double> draws(n);
        for (auto& d : draws) d = sample_lifetime(lifetimes, rng);
        std::sort(draws.begin(), draws.end());
        double ks = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double cdf = 1.0 - lifetime_survival(lifetimes, draws[i]);
            const double lo = static_cast<double>(i) / n;
            const double hi = static_cast<double>(i + 1) / n;
            ks = std::max(ks, std::max(std::fabs(cdf - lo), std::fabs(hi - cdf)));
        }
        const double critical = 1.6276 / std::sqrt(static_cast<double>(n));
        suite.check("lifetime KS below 1% critical value", ks < critical, ks, critical);
    }

    {  // density integrates to one; survival consistent with the density
        // s = u^2 removes the integrable singularity of the kappa = 1/2 law
        auto cdf_to = [&](double s) {
            return integrate_adaptive(
                [&](double u) { return 2.0 * u * lifetime_density(lifetimes, u * u); },
                1e-150, std::sqrt(s), 1e-13);
        };
        const double mass = cdf_to(200.0);
        suite.check("lifetime density total mass", std::fabs(mass - 1.0) < 1e-8, mass, 1.0);
        double worst = 0.0;
        for (double s : {0.1, 0.5, 1.0, 2.0, 5.0}) {
            worst = std::max(worst,
                             std::fabs(lifetime_survival(lifetimes, s) + cdf_to(s) - 1.0));
        }
        suite.check("survival + CDF = 1", worst < 1e-10, worst, 1e-10);
    }

    {  // lag correlation across distinct stream indices
        const std::size_t n = quick ? 20000 : 100000;
        RngStream a(seed, 100);
        RngStream b(seed, 101);
        double sxy = 0.0;
        double sx = 0.0;
        double sy = 0.0;
        double sxx = 0.0;
        double syy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = a.normal();
            const double y = b.normal();
            sxy += x * y;
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
        }
        const double nd = static_cast<double>(n);
        const double cov = sxy / nd - (sx / nd) * (sy / nd);
        const double corr = cov / std::sqrt((sxx / nd - sx * sx / (nd * nd)) *
                                            (syy / nd - sy * sy / (nd * nd)));
        suite.check("stream cross-correlation", std::fabs(corr) < 0.01, corr, 0.01);
    }

    {  // mesh law: increments sum to the horizon; P[N=0] = survival(horizon)
        RngStream rng(seed, 3);
        const std::uint64_t n = quick ? 100000 : 1000000;
        std::uint64_t zero_switches = 0;
        double worst_sum = 0.0;
        double worst_sigma_floor = 0.0;
        const SigmaSchedule schedule{1.0, -1.0};
        for (std::uint64_t i = 0; i < n; ++i) {
            const TimeMesh mesh = build_mesh(0.0, 1.0, lifetimes, rng);
            double total = 0.0;
            for (double dt : mesh.increments) total += dt;
            worst_sum = std::max(worst_sum, std::fabs(total - 1.0));
            if (mesh.n_switches == 0) ++zero_switches;
            if (i < 1000) {
                const double floor = schedule.sigma0;  // horizon 1, n = -1
                for (std::size_t leg = 1; leg <= mesh.n_legs(); ++leg) {
                    const double s = sigma_at(schedule, mesh, leg);
                    if (s < floor) {
                        worst_sigma_floor = std::max(worst_sigma_floor, floor - s);
                    }
                }
            }
        }
        suite.check("mesh increments sum to horizon", worst_sum < 1e-12, worst_sum, 1e-12);
        const double p0 = static_cast<double>(zero_switches) / static_cast<double>(n);
        const double target = lifetime_survival(lifetimes, 1.0);
        suite.check("P[no switch] = survival(horizon)", std::fabs(p0 - target) < 0.005, p0,
                    target);
        suite.check("sigma bounded below on meshes", worst_sigma_floor == 0.0,
                    worst_sigma_floor, 0.0);
    }

    {  // weight identities: E[W1] = 0, E[W2] = 0, E[W1 (a + c dW)] = c / sigma
        RngStream rng(seed, 4);
        const double sigma = 1.3;
        const double dt = 0.5;
        StreamingStats w1s;
        StreamingStats w2s;
        StreamingStats proj;
        for (std::uint64_t i = 0; i < n_draws; ++i) {
            const double dw = sample_gaussian_increment(rng, dt);
            w1s.push(weight_w1(sigma, dw, dt));
            w2s.push(weight_w2(sigma, dw, dt));
            proj.push(weight_w1(sigma, dw, dt) * (0.7 + 2.0 * dw));
        }
        suite.check("E[W1] = 0", std::fabs(w1s.mean) < 3.0 * w1s.std_error() + 1e-12,
                    w1s.mean, 3.0 * w1s.std_error());
        suite.check("E[W2] = 0", std::fabs(w2s.mean) < 3.0 * w2s.std_error() + 1e-12,
                    w2s.mean, 3.0 * w2s.std_error());
        suite.check("E[W1 (a + c dW)] = c / sigma",
                    std::fabs(proj.mean - 2.0 / sigma) < 3.0 * proj.std_error(), proj.mean,
                    2.0 / sigma);
    }

    {  // sign/log accumulator equals the plain product while in range
        RngStream rng(seed, 5);
        double worst = 0.0;
        for (int rep = 0; rep < (quick ? 1000 : 10000); ++rep) {
            WeightProduct wp;
            double plain = 1.0;
            for (int k = 0; k < 30; ++k) {
                const double f = 2.0 * rng.normal();
                wp.accumulate(f);
                plain *= f;
            }
            if (plain != 0.0 && std::isfinite(plain)) {
                worst = std::max(worst, std::fabs(wp.value() - plain) / std::fabs(plain));
            }
        }
        suite.check("sign/log product matches plain", worst < 1e-9, worst, 1e-9);
    }

    const ProblemSpec linear = make_builtin_problem("paper-linear");
    const SigmaSchedule lin_schedule{linear.schedule_sigma0, -1.0};
    const EstimatorOptions opts;

    {  // antithetic symmetry: flipping the last increment swaps (beta1, beta2)
        RngStream rng(seed, 6);
        double worst = 0.0;
        int tested = 0;
        for (int rep = 0; rep < 2000 && tested < 500; ++rep) {
            const TimeMesh mesh = build_mesh(0.0, 1.0, lifetimes, rng);
            PathSample path = evolve_path(mesh, linear.drift, lin_schedule, 10.0, rng);
            if (mesh.n_switches < 1) continue;
            ++tested;
            const EstimatorSample base = evaluate_transport(path, linear, lin_schedule,
                                                            lifetimes, opts);
            PathSample flipped = path;
            const std::size_t last = flipped.dw.size() - 1;
            flipped.dw[last] = -flipped.dw[last];
            flipped.x[flipped.x.size() - 1] =
                flipped.cv_point + flipped.sigma_legs[last] * flipped.dw[last];
            flipped.x_hat_terminal =
                flipped.cv_point - flipped.sigma_legs[last] * flipped.dw[last];
            const EstimatorSample flip = evaluate_transport(flipped, linear, lin_schedule,
                                                            lifetimes, opts);
            const double scale = std::max({std::fabs(base.beta1), std::fabs(base.beta2), 1.0});
            worst = std::max(worst, std::fabs(base.beta1 - flip.beta2) / scale);
            worst = std::max(worst, std::fabs(base.beta2 - flip.beta1) / scale);
            worst = std::max(worst,
                             std::fabs((base.beta1 + base.beta2) - (flip.beta1 + flip.beta2)) /
                                 scale);
        }
        suite.check("antithetic flip swaps beta pair", worst < 1e-12, worst, 1e-12);
    }

    {  // no-switch stratum: mean of psi * survival equals E[g(X_T)]
        RngStream rng(seed, 7);
        const std::uint64_t n = quick ? 100000 : 400000;
        StreamingStats stratum;
        StreamingStats direct;
        const double surv = lifetime_survival(lifetimes, 1.0);
        for (std::uint64_t i = 0; i < n; ++i) {
            RngStream srng(seed + 7, i);
            const EstimatorSample s = sample_unbiased_transport(linear, 0.0, 10.0,
                                                                lin_schedule, lifetimes, opts,
                                                                srng);
            if (s.n_switches == 0) stratum.push(s.value * surv);
            const double z = rng.normal();
            direct.push(linear.terminal(10.0 + 1.0 + lin_schedule.sigma0 * z));
        }
        const double tol = 3.0 * std::sqrt(stratum.std_error() * stratum.std_error() +
                                           direct.std_error() * direct.std_error());
        suite.check("no-switch stratum matches E[g(X_T)]",
                    std::fabs(stratum.mean - direct.mean) < tol, stratum.mean - direct.mean,
                    tol);
    }

    {  // characteristics oracle solves the PDE in finite differences
        const ProblemDiagnostics diag = validate_problem(linear);
        suite.check("paper-linear PDE residual", diag.has_residual && diag.pde_residual_max < 1e-4,
                    diag.pde_residual_max, 1e-4);
        const ProblemDiagnostics nl = validate_problem(make_builtin_problem("paper-nonlinear"));
        suite.check("paper-nonlinear PDE residual", nl.has_residual && nl.pde_residual_max < 1e-4,
                    nl.pde_residual_max, 1e-4);
    }

    {  // perturbed closed form vs Monte Carlo mean
        const double sigma0 = 0.1;
        const double target = perturbed_closed_form(linear, sigma0, 0.0, 10.0);
        const SampleFn fn = [&](RngStream& rng) {
            return sample_perturbed_linear(linear, 0.0, 10.0, sigma0, rng);
        };
        const RunReport run = run_estimate(fn, quick ? 100000 : 1000000, seed + 8, 0, 0.90, 0);
        suite.check("perturbed closed form vs Monte Carlo",
                    std::fabs(run.mean - target) < 3.0 * run.std_error, run.mean, target);
    }

    {  // unbiased estimator hits the characteristics value
        const double target = characteristics_solution(linear, 0.0, 10.0);
        const SampleFn fn = [&](RngStream& rng) {
            return sample_unbiased_transport(linear, 0.0, 10.0, lin_schedule, lifetimes, opts,
                                             rng);
        };
        const RunReport run = run_estimate(fn, quick ? 200000 : 1000000, seed + 9, 0, 0.90, 0);
        suite.check("unbiased transport vs characteristics",
                    std::fabs(run.mean - target) < 3.0 * run.std_error + 0.002, run.mean,
                    target);
        suite.check("unbiased transport zero poisoned", run.poisoned_count == 0,
                    static_cast<double>(run.poisoned_count), 0.0);
    }

    {  // config round-trip fixed point
        const ParsedConfig cfg = parse_config("[problem]\nname = paper-linear\n");
        const std::string emitted = emit_config(cfg);
        const bool ok = emit_config(parse_config(emitted)) == emitted;
        suite.check("config emit/parse fixed point", ok, ok ? 1.0 : 0.0, 1.0);
    }

    out << (suite.failures == 0 ? "validation OK" : "validation FAILED") << " ("
        << suite.failures << " failures)\n";
    return suite.failures;
}

}  // namespace rsmc
