#pragma once

// Reference values computed without the library's own solvers.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace oracle {

// n * int dw/2pi S(w) / (k'^2 + (delta - w)^2) for the symmetric Lorentzian
// pair, via the Lorentzian convolution identity (widths add).
inline double lorentzian_occupation(double n, double kp, double delta, double p, double w0, double width) {
    auto peak = [&](double c) {
        const double d = delta - c;
        return (width + kp) / (2.0 * kp * (d * d + (width + kp) * (width + kp)));
    };
    return n * p * (peak(w0) + peak(-w0));
}

inline double lorentzian_density(double omega, double p, double w0, double width) {
    auto l = [&](double c) { return width / ((omega - c) * (omega - c) + width * width); };
    return p * (l(w0) + l(-w0));
}

// Composite Simpson on [a, b] with n (even) intervals.
template <class F>
double simpson(F f, double a, double b, std::size_t n) {
    const double h = (b - a) / static_cast<double>(n);
    double s = f(a) + f(b);
    for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Stationary covariance by squared Smith iteration on the sampled system
// V = Phi V Phi^T + Q, with (Phi, Q) from Van Loan's block exponential.
inline Eigen::MatrixXd lyapunov_smith(const Eigen::MatrixXd& a, const Eigen::MatrixXd& d, double h,
                                      int doublings = 80) {
    const auto n = a.rows();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    m.topLeftCorner(n, n) = -a * h;
    m.topRightCorner(n, n) = d * h;
    m.bottomRightCorner(n, n) = a.transpose() * h;
    const Eigen::MatrixXd e = m.exp();
    const Eigen::MatrixXd phi = e.bottomRightCorner(n, n).transpose();
    Eigen::MatrixXd q = phi * e.topRightCorner(n, n);
    q = 0.5 * (q + q.transpose());
    Eigen::MatrixXd v = q, p = phi;
    for (int k = 0; k < doublings; ++k) {
        v = v + p * v * p.transpose();
        p = p * p;
        if (p.norm() < 1e-300) break;
    }
    return v;
}

// Least-squares slope of log(y) against log(x).
template <class Xs, class Ys>
double loglog_slope(const Xs& x, const Ys& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Small deterministic generator for property tests (splitmix64).
class Gen {
public:
    explicit Gen(std::uint64_t seed) : s_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    bool coin() { return next() & 1; }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

private:
    std::uint64_t s_;
};

}  // namespace oracle
