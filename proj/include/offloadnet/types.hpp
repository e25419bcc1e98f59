#pragma once

#include <Eigen/Core>

namespace offloadnet {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using FlagVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

}  // namespace offloadnet
