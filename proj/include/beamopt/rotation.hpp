#pragma once

#include <Eigen/Core>

namespace beamopt {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Rotation pseudo-vector; its norm is the rotation angle in radians.
using AxialVector3 = Eigen::Vector3d;

/// Element of SO(3). Construction is unchecked; use `is_rotation` to audit.
using Rotation3 = Eigen::Matrix3d;

/// Skew-symmetric matrix with hat(theta) * v == theta.cross(v).
Mat3 hat(const AxialVector3& theta);

/// Axial vector of a skew matrix. Throws std::invalid_argument when the
/// symmetric part of `skew` has a max-norm above `tol`.
AxialVector3 vee(const Mat3& skew, double tol = 1e-12);

/// Rodrigues form of the exponential map so(3) -> SO(3).
/// Below an angle of 1e-8 the trigonometric coefficients are replaced by
/// their second-order Taylor expansions.
Rotation3 exp_so3(const AxialVector3& theta);

/// Multiplicative (right) update lambda * exp(delta_theta).
Rotation3 rotation_update(const Rotation3& lambda, const AxialVector3& delta_theta);

bool is_rotation(const Mat3& m, double tol = 1e-12);

/// Planar rotation matrix for an angle in radians.
Mat2 rot2(double angle);

/// Derivative of rot2 with respect to the angle.
Mat2 rot2_prime(double angle);

}  // namespace beamopt
