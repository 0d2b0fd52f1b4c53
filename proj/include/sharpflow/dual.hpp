#pragma once

// Forward-mode dual numbers: enough arithmetic to differentiate the discrete
// residual of the diffuse solver column by column.

namespace sharpflow {

struct Dual {
    double v = 0.0; ///< value
    double d = 0.0; ///< derivative along the seeded direction

    constexpr Dual() = default;
    constexpr Dual(double value, double deriv = 0.0) : v(value), d(deriv) {}

    constexpr Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
    constexpr Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
    constexpr Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
    constexpr Dual& operator/=(const Dual& o) {
        d = (d * o.v - v * o.d) / (o.v * o.v);
        v /= o.v;
        return *this;
    }

    friend constexpr Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend constexpr Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend constexpr Dual operator*(Dual a, const Dual& b) { return a *= b; }
    friend constexpr Dual operator/(Dual a, const Dual& b) { return a /= b; }
    friend constexpr Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
    friend constexpr Dual operator+(double a, const Dual& b) { return {a + b.v, b.d}; }
    friend constexpr Dual operator-(double a, const Dual& b) { return {a - b.v, -b.d}; }
    friend constexpr Dual operator*(double a, const Dual& b) { return {a * b.v, a * b.d}; }
    friend constexpr Dual operator+(const Dual& a, double b) { return {a.v + b, a.d}; }
    friend constexpr Dual operator-(const Dual& a, double b) { return {a.v - b, a.d}; }
    friend constexpr Dual operator*(const Dual& a, double b) { return {a.v * b, a.d * b}; }
    friend constexpr Dual operator/(const Dual& a, double b) { return {a.v / b, a.d / b}; }
};

inline constexpr double value_of(double x) { return x; }
inline constexpr double value_of(const Dual& x) { return x.v; }

} // namespace sharpflow
