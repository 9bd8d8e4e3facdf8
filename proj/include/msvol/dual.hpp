#pragma once

#include <cmath>

#include <Eigen/Core>

namespace msvol {

// Forward-mode first derivatives with a fixed number of directions. Only the
// operations needed by the parameter-to-coefficient map are provided.
template <int N>
struct Dual {
    double v = 0.0;
    Eigen::Matrix<double, N, 1> g = Eigen::Matrix<double, N, 1>::Zero();

    Dual() = default;
    Dual(double value) : v(value) {}
    static Dual seed(double value, int direction) {
        Dual d(value);
        d.g(direction) = 1.0;
        return d;
    }

    Dual operator-() const {
        Dual r(-v);
        r.g = -g;
        return r;
    }
    Dual& operator+=(const Dual& o) {
        v += o.v;
        g += o.g;
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        g -= o.g;
        return *this;
    }
};

template <int N>
Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N>
Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }

template <int N>
Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
    Dual<N> r(a.v * b.v);
    r.g = a.g * b.v + b.g * a.v;
    return r;
}

template <int N>
Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
    Dual<N> r(a.v / b.v);
    r.g = (a.g - r.v * b.g) / b.v;
    return r;
}

template <int N>
Dual<N> exp(const Dual<N>& a) {
    Dual<N> r(std::exp(a.v));
    r.g = r.v * a.g;
    return r;
}

template <int N>
Dual<N> sqrt(const Dual<N>& a) {
    Dual<N> r(std::sqrt(a.v));
    r.g = a.g / (2.0 * r.v);
    return r;
}

} // namespace msvol
