#pragma once

#include <variant>

#include <Eigen/Core>

namespace beamopt {

struct CircularSection {
    double diameter = 1.0;
};

struct RectangularSection {
    double width = 1.0;
    double height = 1.0;
};

/// Linear elastic material plus cross-section geometry.
struct SectionLaw {
    double young = 1.0;
    double shear = 1.0;
    double shear_factor = 1.0;
    double density = 1.0;
    std::variant<CircularSection, RectangularSection> geometry = RectangularSection{};

    /// Throws std::invalid_argument on non-positive moduli or dimensions.
    void validate() const;
};

struct SectionProperties {
    double area = 0.0;
    double inertia = 0.0;  // in-plane bending
    double polar = 0.0;
};

SectionProperties section_properties(const SectionLaw& section);

/// Which cross-section dimension a design variable drives.
enum class DesignRole {
    diameter,   // circular sections
    thickness,  // height of rectangular sections
};

/// Diagonal constitutive matrices C = diag(EA, kGA, kGA) and
/// D = diag(GJ, EI, EI) together with their derivatives with respect to the
/// active design dimension.
struct SectionStiffness {
    Eigen::Vector3d C = Eigen::Vector3d::Zero();
    Eigen::Vector3d D = Eigen::Vector3d::Zero();
    Eigen::Vector3d dC = Eigen::Vector3d::Zero();
    Eigen::Vector3d dD = Eigen::Vector3d::Zero();

    double EA() const { return C[0]; }
    double GA() const { return C[1]; }
    double EI() const { return D[1]; }
    double dEA() const { return dC[0]; }
    double dGA() const { return dC[1]; }
    double dEI() const { return dD[1]; }
};

/// Stiffness of `section` with its design dimension replaced by `dimension`.
/// Throws std::invalid_argument if `role` does not apply to the geometry.
SectionStiffness stiffness_and_sensitivity(const SectionLaw& section, DesignRole role, double dimension);

/// Stiffness at the section's nominal dimensions (derivative block refers
/// to the natural role of the geometry).
SectionStiffness stiffness(const SectionLaw& section);

/// Natural design role for the section geometry.
DesignRole natural_role(const SectionLaw& section);

/// Current value of the dimension driven by `role`.
double design_dimension(const SectionLaw& section, DesignRole role);

/// Area and its derivative with respect to the active dimension.
std::pair<double, double> area_and_derivative(const SectionLaw& section, DesignRole role, double dimension);

}  // namespace beamopt
