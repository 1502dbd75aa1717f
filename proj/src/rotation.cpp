#include "beamopt/rotation.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/LU>

namespace beamopt {

Mat3 hat(const AxialVector3& theta)
{
    Mat3 m;
    m << 0.0, -theta.z(), theta.y(),
         theta.z(), 0.0, -theta.x(),
         -theta.y(), theta.x(), 0.0;
    return m;
}

AxialVector3 vee(const Mat3& skew, double tol)
{
    const Mat3 sym = 0.5 * (skew + skew.transpose());
    if (sym.cwiseAbs().maxCoeff() > tol) {
        throw std::invalid_argument("vee: matrix is not skew-symmetric");
    }
    // average the mirrored entries so round-off in the input does not bias one side
    return AxialVector3(0.5 * (skew(2, 1) - skew(1, 2)),
                        0.5 * (skew(0, 2) - skew(2, 0)),
                        0.5 * (skew(1, 0) - skew(0, 1)));
}

Rotation3 exp_so3(const AxialVector3& theta)
{
    const double angle2 = theta.squaredNorm();
    const double angle = std::sqrt(angle2);

    double c, s_over, omc_over;
    if (angle < 1e-8) {
        c = 1.0 - 0.5 * angle2;
        s_over = 1.0 - angle2 / 6.0;
        omc_over = 0.5 - angle2 / 24.0;
    } else {
        c = std::cos(angle);
        s_over = std::sin(angle) / angle;
        omc_over = (1.0 - c) / angle2;
    }
    return c * Mat3::Identity() + s_over * hat(theta) + omc_over * theta * theta.transpose();
}

Rotation3 rotation_update(const Rotation3& lambda, const AxialVector3& delta_theta)
{
    return lambda * exp_so3(delta_theta);
}

bool is_rotation(const Mat3& m, double tol)
{
    const double orth = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
    return orth < tol && std::abs(m.determinant() - 1.0) < tol;
}

Mat2 rot2(double angle)
{
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat2 r;
    r << c, -s, s, c;
    return r;
}

Mat2 rot2_prime(double angle)
{
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Mat2 r;
    r << -s, -c, c, -s;
    return r;
}

}  // namespace beamopt
