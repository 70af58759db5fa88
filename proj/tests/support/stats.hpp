#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>

namespace roml::teststats {

// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);
    const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                                  b * std::log1p(-x)) / a;
    constexpr double tiny = 1e-300;
    double f = 1.0, c = 1.0, d = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const int m = i / 2;
        double num;
        if (i == 0) num = 1.0;
        else if (i % 2 == 0) num = m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        else num = -((a + m) * (a + b + m) * x) / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        d = 1.0 / d;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        const double cd = c * d;
        f *= cd;
        if (std::abs(1.0 - cd) < 1e-14) return front * (f - 1.0);
    }
    throw std::runtime_error("incomplete_beta did not converge");
}

// P(T > t) for Student's t with df degrees of freedom.
inline double student_t_sf(double t, double df) {
    const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    return t >= 0.0 ? tail : 1.0 - tail;
}

struct PairedTest {
    std::size_t n = 0;
    double mean_diff = 0.0;
    double t = 0.0;
    double p = 1.0;  // one-sided, H1: mean(a - b) > 0
};

inline PairedTest paired_t_greater(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("paired_t_greater: need >= 2 pairs");
    PairedTest r;
    r.n = a.size();
    for (std::size_t i = 0; i < r.n; ++i) r.mean_diff += a[i] - b[i];
    r.mean_diff /= static_cast<double>(r.n);
    double ss = 0.0;
    for (std::size_t i = 0; i < r.n; ++i) ss += (a[i] - b[i] - r.mean_diff) * (a[i] - b[i] - r.mean_diff);
    const double se = std::sqrt(ss / static_cast<double>(r.n - 1) / static_cast<double>(r.n));
    if (se == 0.0) {
        r.t = r.mean_diff > 0 ? std::numeric_limits<double>::infinity() : 0.0;
        r.p = r.mean_diff > 0 ? 0.0 : 1.0;
        return r;
    }
    r.t = r.mean_diff / se;
    r.p = student_t_sf(r.t, static_cast<double>(r.n - 1));
    return r;
}

struct SignTest {
    std::size_t wins = 0;
    std::size_t losses = 0;
    double p = 1.0;  // one-sided, H1: a > b more often; ties dropped
};

inline SignTest sign_test_greater(std::span<const double> a, std::span<const double> b) {
    SignTest r;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) ++r.wins;
        else if (a[i] < b[i]) ++r.losses;
    }
    const std::size_t n = r.wins + r.losses;
    r.p = 0.0;
    for (std::size_t k = r.wins; k <= n; ++k)
        r.p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
    if (n == 0) r.p = 1.0;
    return r;
}

}  // namespace roml::teststats
