#pragma once

#include <Eigen/Dense>

namespace dwmpc {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat12x4 = Eigen::Matrix<double, 12, 4>;
using Mat12x3 = Eigen::Matrix<double, 12, 3>;
using Mat4x12 = Eigen::Matrix<double, 4, 12>;
using RowVec3 = Eigen::RowVector3d;

// State layout used throughout: [p(3), rpy(3), v(3), omega(3)].
inline constexpr int kStateDim = 12;
inline constexpr int kInputDim = 4;

inline constexpr int kPosIdx = 0;
inline constexpr int kAttIdx = 3;
inline constexpr int kVelIdx = 6;
inline constexpr int kRateIdx = 9;

}  // namespace dwmpc
