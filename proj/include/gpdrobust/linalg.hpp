#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>

#include "errors.hpp"

namespace gpdrobust {

struct Vec2 {
    std::array<double, 2> v{0.0, 0.0};

    constexpr Vec2() = default;
    constexpr Vec2(double a, double b) : v{a, b} {}

    constexpr double& operator[](std::size_t i) { return v[i]; }
    constexpr double operator[](std::size_t i) const { return v[i]; }

    constexpr Vec2& operator+=(const Vec2& o) { v[0] += o.v[0]; v[1] += o.v[1]; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { v[0] -= o.v[0]; v[1] -= o.v[1]; return *this; }
    constexpr Vec2& operator*=(double s) { v[0] *= s; v[1] *= s; return *this; }

    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator-(const Vec2& a) { return {-a.v[0], -a.v[1]}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr Vec2 operator/(Vec2 a, double s) { return a *= 1.0 / s; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Vec2& a) { return std::hypot(a[0], a[1]); }

// Row-major 2x2.
struct Mat2 {
    std::array<double, 4> m{0.0, 0.0, 0.0, 0.0};

    constexpr Mat2() = default;
    constexpr Mat2(double a11, double a12, double a21, double a22) : m{a11, a12, a21, a22} {}

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }

    constexpr double& operator()(std::size_t i, std::size_t j) { return m[2 * i + j]; }
    constexpr double operator()(std::size_t i, std::size_t j) const { return m[2 * i + j]; }

    constexpr Mat2& operator+=(const Mat2& o) { for (std::size_t i = 0; i < 4; ++i) m[i] += o.m[i]; return *this; }
    constexpr Mat2& operator-=(const Mat2& o) { for (std::size_t i = 0; i < 4; ++i) m[i] -= o.m[i]; return *this; }
    constexpr Mat2& operator*=(double s) { for (auto& x : m) x *= s; return *this; }

    friend constexpr Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
    friend constexpr Mat2 operator-(Mat2 a, const Mat2& b) { return a -= b; }
    friend constexpr Mat2 operator*(double s, Mat2 a) { return a *= s; }
    friend constexpr Mat2 operator*(Mat2 a, double s) { return a *= s; }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;

    friend constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
        return {a(0, 0) * b(0, 0) + a(0, 1) * b(1, 0), a(0, 0) * b(0, 1) + a(0, 1) * b(1, 1),
                a(1, 0) * b(0, 0) + a(1, 1) * b(1, 0), a(1, 0) * b(0, 1) + a(1, 1) * b(1, 1)};
    }
    friend constexpr Vec2 operator*(const Mat2& a, const Vec2& x) {
        return {a(0, 0) * x[0] + a(0, 1) * x[1], a(1, 0) * x[0] + a(1, 1) * x[1]};
    }
};

inline constexpr double trace(const Mat2& a) { return a(0, 0) + a(1, 1); }
inline constexpr double det(const Mat2& a) { return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0); }
inline constexpr Mat2 transpose(const Mat2& a) { return {a(0, 0), a(1, 0), a(0, 1), a(1, 1)}; }
inline constexpr Mat2 outer(const Vec2& a, const Vec2& b) {
    return {a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]};
}

inline Mat2 inverse(const Mat2& a) {
    const double d = det(a);
    const double scale = std::max({std::abs(a(0, 0)), std::abs(a(0, 1)), std::abs(a(1, 0)), std::abs(a(1, 1))});
    if (!(std::abs(d) > 1e-300) || !(std::abs(d) > 1e-14 * scale * scale))
        throw domain_error("singular 2x2 matrix");
    return {a(1, 1) / d, -a(0, 1) / d, -a(1, 0) / d, a(0, 0) / d};
}

inline double max_abs(const Mat2& a) {
    double r = 0.0;
    for (double x : a.m) r = std::max(r, std::abs(x));
    return r;
}
inline double max_abs(const Vec2& a) { return std::max(std::abs(a[0]), std::abs(a[1])); }

inline bool is_symmetric(const Mat2& a, double tol = 1e-12) {
    return std::abs(a(0, 1) - a(1, 0)) <= tol * std::max(1.0, max_abs(a));
}
inline bool is_positive_definite(const Mat2& a) {
    return a(0, 0) > 0.0 && det(a) > 0.0;
}

// d_beta = diag(1, beta)
inline constexpr Mat2 d_beta(double beta) { return Mat2::diag(1.0, beta); }

inline std::ostream& operator<<(std::ostream& os, const Vec2& a) {
    return os << "(" << a[0] << ", " << a[1] << ")";
}
inline std::ostream& operator<<(std::ostream& os, const Mat2& a) {
    return os << "[[" << a(0, 0) << ", " << a(0, 1) << "], [" << a(1, 0) << ", " << a(1, 1) << "]]";
}

} // namespace gpdrobust
