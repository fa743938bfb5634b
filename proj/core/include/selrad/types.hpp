#pragma once

#include <complex>

#include <Eigen/Dense>

namespace selrad {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Tensor3 = Eigen::Matrix3cd;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kI{0.0, 1.0};

}  // namespace selrad
