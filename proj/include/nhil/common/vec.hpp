#pragma once

#include <Eigen/Core>

namespace nhil {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

} // namespace nhil
