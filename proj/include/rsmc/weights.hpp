#pragma once

#include <cmath>
#include <stdexcept>

namespace rsmc {

// First-order Malliavin weight of one leg: sigma^-1 DW / DT.
inline double weight_w1(double sigma, double dw, double dt) {
    return dw / (sigma * dt);
}

// Second-order Malliavin weight: sigma^-2 (DW^2 - DT) / DT^2.
inline double weight_w2(double sigma, double dw, double dt) {
    return (dw * dw - dt) / (sigma * sigma * dt * dt);
}

// Drift-mismatch factor M = db * W1.
inline double factor_m(double delta_b, double sigma, double dw, double dt) {
    return delta_b * weight_w1(sigma, dw, dt);
}

// Laplacian-correction factor V = -1/2 sigma_prev^2 * W2(sigma_cur).
inline double factor_v(double sigma_prev, double sigma_cur, double dw, double dt) {
    return -0.5 * sigma_prev * sigma_prev * weight_w2(sigma_cur, dw, dt);
}

// Per-switch factor P = (M + V) / f(previous increment).
inline double switch_factor_p(double m, double v, double f_prev) {
    if (!(f_prev > 0.0)) {
        throw std::domain_error("switch_factor_p: density divisor must be positive");
    }
    return (m + v) / f_prev;
}

// Running product of switch factors kept in both plain and sign/log form.
// The plain value is the fast path; the sign/log pair survives magnitudes
// the plain double cannot, and the two are cross-checked in tests.
struct WeightProduct {
    int sign = 1;
    double log_magnitude = 0.0;
    double plain_value = 1.0;

    void accumulate(double factor) {
        plain_value *= factor;
        if (factor == 0.0 || sign == 0) {
            sign = 0;
            return;
        }
        if (factor < 0.0) sign = -sign;
        log_magnitude += std::log(std::fabs(factor));
    }

    bool plain_finite() const { return std::isfinite(plain_value); }

    // Plain when representable, sign/log otherwise.
    double value(bool* used_log_path = nullptr) const {
        if (sign == 0) {
            if (used_log_path) *used_log_path = false;
            return 0.0;
        }
        if (plain_finite() && plain_value != 0.0) {
            if (used_log_path) *used_log_path = false;
            return plain_value;
        }
        if (used_log_path) *used_log_path = true;
        return sign * std::exp(log_magnitude);
    }
};

}  // namespace rsmc
