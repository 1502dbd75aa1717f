#include "beamopt/section.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

namespace beamopt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double pi = std::numbers::pi;

void check_positive(double value, const char* what)
{
    if (!(value > 0.0)) {
        throw std::invalid_argument(std::string("section: non-positive ") + what);
    }
}

}  // namespace

void SectionLaw::validate() const
{
    check_positive(young, "Young's modulus");
    check_positive(shear, "shear modulus");
    check_positive(shear_factor, "shear correction factor");
    check_positive(density, "density");
    std::visit(overloaded{
                   [](const CircularSection& c) { check_positive(c.diameter, "diameter"); },
                   [](const RectangularSection& r) {
                       check_positive(r.width, "width");
                       check_positive(r.height, "height");
                   },
               },
               geometry);
}

SectionProperties section_properties(const SectionLaw& section)
{
    section.validate();
    return std::visit(overloaded{
                          [](const CircularSection& c) {
                              const double d2 = c.diameter * c.diameter;
                              return SectionProperties{d2 * pi / 4.0, d2 * d2 * pi / 64.0, d2 * d2 * pi / 32.0};
                          },
                          [](const RectangularSection& r) {
                              const double b = r.width;
                              const double h = r.height;
                              return SectionProperties{b * h, b * h * h * h / 12.0, b * h * (b * b + h * h) / 12.0};
                          },
                      },
                      section.geometry);
}

DesignRole natural_role(const SectionLaw& section)
{
    return std::holds_alternative<CircularSection>(section.geometry) ? DesignRole::diameter : DesignRole::thickness;
}

double design_dimension(const SectionLaw& section, DesignRole role)
{
    if (role == DesignRole::diameter) {
        if (const auto* c = std::get_if<CircularSection>(&section.geometry)) {
            return c->diameter;
        }
    } else if (const auto* r = std::get_if<RectangularSection>(&section.geometry)) {
        return r->height;
    }
    throw std::invalid_argument("section: design role does not apply to this cross-section");
}

std::pair<double, double> area_and_derivative(const SectionLaw& section, DesignRole role, double dimension)
{
    check_positive(dimension, "design dimension");
    if (role == DesignRole::diameter && std::holds_alternative<CircularSection>(section.geometry)) {
        return {dimension * dimension * pi / 4.0, dimension * pi / 2.0};
    }
    if (role == DesignRole::thickness) {
        if (const auto* r = std::get_if<RectangularSection>(&section.geometry)) {
            return {r->width * dimension, r->width};
        }
    }
    throw std::invalid_argument("section: design role does not apply to this cross-section");
}

SectionStiffness stiffness_and_sensitivity(const SectionLaw& section, DesignRole role, double dimension)
{
    section.validate();
    check_positive(dimension, "design dimension");
    const double E = section.young;
    const double G = section.shear;
    const double k = section.shear_factor;

    double A = 0.0, dA = 0.0, I = 0.0, dI = 0.0, J = 0.0, dJ = 0.0;
    if (role == DesignRole::diameter && std::holds_alternative<CircularSection>(section.geometry)) {
        const double d = dimension;
        A = d * d * pi / 4.0;
        dA = d * pi / 2.0;
        I = d * d * d * d * pi / 64.0;
        dI = d * d * d * pi / 16.0;
        J = 2.0 * I;
        dJ = 2.0 * dI;
    } else if (role == DesignRole::thickness && std::holds_alternative<RectangularSection>(section.geometry)) {
        const double b = std::get<RectangularSection>(section.geometry).width;
        const double h = dimension;
        A = b * h;
        dA = b;
        I = b * h * h * h / 12.0;
        dI = b * h * h / 4.0;
        J = b * h * (b * b + h * h) / 12.0;
        dJ = b * (b * b + 3.0 * h * h) / 12.0;
    } else {
        throw std::invalid_argument("section: design role does not apply to this cross-section");
    }

    SectionStiffness s;
    s.C = Eigen::Vector3d(E * A, k * G * A, k * G * A);
    s.D = Eigen::Vector3d(G * J, E * I, E * I);
    s.dC = Eigen::Vector3d(E * dA, k * G * dA, k * G * dA);
    s.dD = Eigen::Vector3d(G * dJ, E * dI, E * dI);
    return s;
}

SectionStiffness stiffness(const SectionLaw& section)
{
    const DesignRole role = natural_role(section);
    return stiffness_and_sensitivity(section, role, design_dimension(section, role));
}

}  // namespace beamopt
