#pragma once

#include <complex>

#include <Eigen/Dense>

namespace syncscope {

using Real = double;
using Complex = std::complex<Real>;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr Real pi = 3.14159265358979323846;

/// Nominal carrier frequency of a 50 Hz system, rad/s.
inline constexpr Real default_omega0 = 2.0 * pi * 50.0;

inline constexpr Complex j_unit{0.0, 1.0};

} // namespace syncscope
