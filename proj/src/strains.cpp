#include "beamopt/strains.hpp"

#include <stdexcept>

#include <Eigen/Geometry>

namespace beamopt {

PointKinematics2D interpolate_kinematics(std::span<const Vec2> positions, std::span<const double> angles,
                                         std::span<const double> N, std::span<const double> dN_dxi,
                                         double jacobian)
{
    if (!(jacobian > 0.0)) {
        throw std::domain_error("degenerate element: non-positive jacobian");
    }
    const std::size_t n = positions.size();
    if (angles.size() != n || N.size() != n || dN_dxi.size() != n) {
        throw std::invalid_argument("interpolate_kinematics: size mismatch");
    }
    PointKinematics2D k;
    for (std::size_t a = 0; a < n; ++a) {
        const double dN_ds = dN_dxi[a] / jacobian;
        k.position_prime += dN_ds * positions[a];
        k.angle += N[a] * angles[a];
        k.angle_prime += dN_ds * angles[a];
    }
    return k;
}

PlanarStrain material_strains_2d(const PointKinematics2D& k)
{
    const Vec2 eps = rot2(k.angle).transpose() * k.position_prime;
    return {eps.x() - 1.0, eps.y(), k.angle_prime};
}

PlanarStrain material_strains_2d(std::span<const Vec2> positions, std::span<const double> angles,
                                 std::span<const double> N, std::span<const double> dN_dxi, double jacobian)
{
    return material_strains_2d(interpolate_kinematics(positions, angles, N, dN_dxi, jacobian));
}

StressResultants2D stress_resultants(const Strains2D& strains, const SectionStiffness& stiffness)
{
    const PlanarStrain e = strains.relative();
    return {stiffness.EA() * e.axial, stiffness.GA() * e.shear, stiffness.EI() * e.curvature};
}

double stored_energy_density(const Strains2D& strains, const SectionStiffness& stiffness)
{
    const PlanarStrain e = strains.relative();
    return 0.5 * (stiffness.EA() * e.axial * e.axial + stiffness.GA() * e.shear * e.shear +
                  stiffness.EI() * e.curvature * e.curvature);
}

VirtualStrain3 virtual_strain_operator_3d(const Rotation3& lambda, const Vec3& eps, const Vec3& omega,
                                          const Vec3& dphi_prime, const Vec3& dtheta, const Vec3& dtheta_prime)
{
    return {lambda.transpose() * dphi_prime + eps.cross(dtheta), dtheta_prime + omega.cross(dtheta)};
}

}  // namespace beamopt
