#pragma once

#include <span>

#include "beamopt/rotation.hpp"
#include "beamopt/section.hpp"

namespace beamopt {

/// Planar material strain measures: axial and shear strain of the
/// cross-section frame, plus curvature (1/length).
struct PlanarStrain {
    double axial = 0.0;
    double shear = 0.0;
    double curvature = 0.0;

    PlanarStrain operator-(const PlanarStrain& o) const
    {
        return {axial - o.axial, shear - o.shear, curvature - o.curvature};
    }
};

/// Current strains together with the values in the stress-free reference.
struct Strains2D {
    PlanarStrain current;
    PlanarStrain reference;

    PlanarStrain relative() const { return current - reference; }
};

/// Planar stress resultants in the cross-section frame.
struct StressResultants2D {
    double axial = 0.0;
    double shear = 0.0;
    double moment = 0.0;
};

/// Interpolated kinematics at one point of an element: position
/// derivative along the arc length, cross-section angle and its derivative.
struct PointKinematics2D {
    Vec2 position_prime = Vec2::Zero();
    double angle = 0.0;
    double angle_prime = 0.0;
};

/// Interpolate nodal positions/angles at a point with shape values `N`,
/// natural derivatives `dN_dxi` and arc-length jacobian `jacobian`.
/// Throws std::domain_error when the jacobian is not positive.
PointKinematics2D interpolate_kinematics(std::span<const Vec2> positions, std::span<const double> angles,
                                         std::span<const double> N, std::span<const double> dN_dxi,
                                         double jacobian);

/// eps = R(angle)^T phi' - e1, curvature = angle'.
PlanarStrain material_strains_2d(const PointKinematics2D& k);

/// Convenience overload doing the interpolation.
PlanarStrain material_strains_2d(std::span<const Vec2> positions, std::span<const double> angles,
                                 std::span<const double> N, std::span<const double> dN_dxi, double jacobian);

/// n = C (eps - eps0), m = EI (kappa - kappa0).
StressResultants2D stress_resultants(const Strains2D& strains, const SectionStiffness& stiffness);

/// Quadratic stored energy density 1/2 (e - e0) . diag(EA, GA, EI) (e - e0).
double stored_energy_density(const Strains2D& strains, const SectionStiffness& stiffness);

/// Linearized 3D strains: d_eps = Lambda^T dphi' + eps x dtheta and
/// d_omega = dtheta' + omega x dtheta, with eps = Lambda^T phi' (unshifted)
/// and omega the axial vector of Lambda^T Lambda'.
struct VirtualStrain3 {
    Vec3 d_eps = Vec3::Zero();
    Vec3 d_omega = Vec3::Zero();
};

VirtualStrain3 virtual_strain_operator_3d(const Rotation3& lambda, const Vec3& eps, const Vec3& omega,
                                          const Vec3& dphi_prime, const Vec3& dtheta, const Vec3& dtheta_prime);

}  // namespace beamopt
