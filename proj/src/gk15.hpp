#pragma once

// Gauss-Kronrod 15/7 rule on [a, b] using Boost's nodes. Works for scalar
// and Eigen column-vector integrands.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <type_traits>

namespace phasenoise::detail {

template <class V>
struct GkSegment {
    double a = 0.0, b = 0.0;
    V value, error;
    double priority = 0.0;
    bool operator<(const GkSegment& o) const { return priority < o.priority; }
};

template <class V>
V gk_abs(const V& x) {
    if constexpr (std::is_arithmetic_v<V>) {
        return std::abs(x);
    } else {
        return x.cwiseAbs();
    }
}

template <class V, class F>
GkSegment<V> gk15(const F& f, double a, double b) {
    using boost::math::quadrature::gauss;
    using boost::math::quadrature::gauss_kronrod;
    const auto& x = gauss_kronrod<double, 15>::abscissa();
    const auto& wk = gauss_kronrod<double, 15>::weights();
    const auto& wg = gauss<double, 7>::weights();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const V fc = f(c);
    V k = fc * wk[0];
    V g = fc * wg[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
        const V pair = f(c + h * x[i]) + f(c - h * x[i]);
        k += pair * wk[i];
        // Gauss nodes sit at the even Kronrod positions.
        if (i % 2 == 0) g += pair * wg[i / 2];
    }
    GkSegment<V> s;
    s.a = a;
    s.b = b;
    s.value = k * h;
    s.error = gk_abs<V>(V((k - g) * h));
    return s;
}

}  // namespace phasenoise::detail
