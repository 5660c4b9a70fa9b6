#pragma once

#include <array>
#include <cmath>

namespace flowmap {

/// Planar position / displacement vector.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double c) const { return {c * x, c * y}; }
    constexpr Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    constexpr double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

constexpr Vec2 operator*(double c, const Vec2& v) { return {c * v.x, c * v.y}; }

inline double distance2(const Vec2& a, const Vec2& b) { return (a - b).norm2(); }

/// 2x2 real matrix, row-major. Row = output component, column = derivative
/// direction when used as a gradient tensor.
struct Mat2 {
    // [ a00 a01 ]
    // [ a10 a11 ]
    double a00 = 0.0, a01 = 0.0, a10 = 0.0, a11 = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 zero() { return {}; }

    constexpr Mat2 operator+(const Mat2& o) const {
        return {a00 + o.a00, a01 + o.a01, a10 + o.a10, a11 + o.a11};
    }
    constexpr Mat2 operator-(const Mat2& o) const {
        return {a00 - o.a00, a01 - o.a01, a10 - o.a10, a11 - o.a11};
    }
    constexpr Mat2 operator*(double c) const { return {c * a00, c * a01, c * a10, c * a11}; }
    constexpr Mat2 operator*(const Mat2& o) const {
        return {a00 * o.a00 + a01 * o.a10, a00 * o.a01 + a01 * o.a11,
                a10 * o.a00 + a11 * o.a10, a10 * o.a01 + a11 * o.a11};
    }
    constexpr Vec2 operator*(const Vec2& v) const {
        return {a00 * v.x + a01 * v.y, a10 * v.x + a11 * v.y};
    }

    constexpr Mat2 transpose() const { return {a00, a10, a01, a11}; }
    constexpr double trace() const { return a00 + a11; }
    constexpr double det() const { return a00 * a11 - a01 * a10; }
    double frobenius() const {
        return std::sqrt(a00 * a00 + a01 * a01 + a10 * a10 + a11 * a11);
    }
    bool finite() const {
        return std::isfinite(a00) && std::isfinite(a01) && std::isfinite(a10) &&
               std::isfinite(a11);
    }

    /// Outer product u v^T.
    static constexpr Mat2 outer(const Vec2& u, const Vec2& v) {
        return {u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y};
    }

    /// Rotation by `angle` radians (proper orthogonal, counterclockwise).
    static Mat2 rotation(double angle) {
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        return {c, -s, s, c};
    }
};

constexpr Mat2 operator*(double c, const Mat2& m) { return m * c; }

/// Unscaled 2x2 inverse helper: inverse = adjugate / det. Callers check det.
constexpr Mat2 adjugate(const Mat2& m) { return {m.a11, -m.a01, -m.a10, m.a00}; }

/// Singular values of a 2x2 matrix, largest first. Closed form via the
/// split into the circular parts (a00 +/- a11, a01 -/+ a10).
inline std::array<double, 2> singular_values(const Mat2& m) {
    const double q1 = std::hypot(m.a00 + m.a11, m.a01 - m.a10);
    const double q2 = std::hypot(m.a00 - m.a11, m.a01 + m.a10);
    return {0.5 * (q1 + q2), 0.5 * std::abs(q1 - q2)};
}

/// Largest eigenvalue of a symmetric 2x2 matrix [[a, b], [b, d]].
inline double symmetric_eig_max(const Mat2& m) {
    const double mean = 0.5 * (m.a00 + m.a11);
    const double half_gap = 0.5 * (m.a00 - m.a11);
    return mean + std::hypot(half_gap, m.a01);
}

} // namespace flowmap
