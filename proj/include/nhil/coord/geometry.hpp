#pragma once

#include <array>
#include <cmath>

#include <Eigen/Core>

#include "nhil/common/vec.hpp"

namespace nhil {

/// Rectangle with its long axis along `angle`.
template <typename Scalar>
struct OrientedRect {
    Vec2<Scalar> center = Vec2<Scalar>::Zero();
    Scalar half_length = 0;
    Scalar half_width = 0;
    Scalar angle = 0;

    Vec2<Scalar> major_axis() const { return Vec2<Scalar>(std::cos(angle), std::sin(angle)); }
    Vec2<Scalar> minor_axis() const { return Vec2<Scalar>(-std::sin(angle), std::cos(angle)); }

    std::array<Vec2<Scalar>, 4> corners() const
    {
        const Vec2<Scalar> u = major_axis() * half_length;
        const Vec2<Scalar> v = minor_axis() * half_width;
        return {center + u + v, center - u + v, center - u - v, center + u - v};
    }

    bool contains(const Vec2<Scalar>& p) const
    {
        const Vec2<Scalar> d = p - center;
        return std::abs(d.dot(major_axis())) <= half_length && std::abs(d.dot(minor_axis())) <= half_width;
    }

    /// Radius of the circumscribed circle.
    Scalar bounding_radius() const { return std::hypot(half_length, half_width); }
};

using Rect = OrientedRect<double>;

namespace detail {

template <typename Scalar>
Scalar projected_radius(const OrientedRect<Scalar>& r, const Vec2<Scalar>& axis)
{
    return r.half_length * std::abs(r.major_axis().dot(axis)) + r.half_width * std::abs(r.minor_axis().dot(axis));
}

} // namespace detail

/// Separating-axis test over the four face normals. Touching counts as intersecting.
template <typename Scalar>
bool obb_intersect(const OrientedRect<Scalar>& a, const OrientedRect<Scalar>& b)
{
    const Vec2<Scalar> d = b.center - a.center;
    const Scalar reach = a.bounding_radius() + b.bounding_radius();
    if (d.squaredNorm() > reach * reach) {
        return false;
    }
    const std::array<Vec2<Scalar>, 4> axes = {a.major_axis(), a.minor_axis(), b.major_axis(), b.minor_axis()};
    for (const auto& axis : axes) {
        if (std::abs(d.dot(axis)) > detail::projected_radius(a, axis) + detail::projected_radius(b, axis)) {
            return false;
        }
    }
    return true;
}

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle)
{
    const Scalar two_pi = Scalar(2) * Scalar(M_PI);
    angle = std::fmod(angle + Scalar(M_PI), two_pi);
    if (angle < 0) {
        angle += two_pi;
    }
    return angle - Scalar(M_PI);
}

} // namespace nhil
