#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <doctest.h>

#include "beamopt/rotation.hpp"
#include "beamopt/section.hpp"
#include "beamopt/strains.hpp"

using namespace beamopt;

namespace {

constexpr double pi = std::numbers::pi;

Mat3 series_exp(const Mat3& a, int terms)
{
    Mat3 sum = Mat3::Identity();
    Mat3 term = Mat3::Identity();
    for (int k = 1; k < terms; ++k) {
        term = term * a / static_cast<double>(k);
        sum += term;
    }
    return sum;
}

AxialVector3 random_axial(std::mt19937_64& rng, double max_angle)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    AxialVector3 v;
    do {
        v = AxialVector3(u(rng), u(rng), u(rng));
    } while (v.norm() > 1.0 || v.norm() < 1e-3);
    return v * max_angle;
}

// two-node element evaluated at its midpoint
PlanarStrain midpoint_strain(const Vec2& a, const Vec2& b, double ta, double tb, double length)
{
    const Vec2 pos[2] = {a, b};
    const double ang[2] = {ta, tb};
    const double N[2] = {0.5, 0.5};
    const double dN[2] = {-0.5, 0.5};
    return material_strains_2d(pos, ang, N, dN, 0.5 * length);
}

}  // namespace

TEST_CASE("exp_so3 special values")
{
    CHECK(exp_so3(AxialVector3::Zero()).isApprox(Mat3::Identity(), 0.0));
    Mat3 quarter;
    quarter << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    CHECK((exp_so3(AxialVector3(0, 0, pi / 2)) - quarter).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("exp_so3 matches the truncated matrix series")
{
    const AxialVector3 theta(0.3, -0.7, 0.2);
    const Mat3 oracle = series_exp(hat(theta), 20);
    CHECK((exp_so3(theta) - oracle).lpNorm<Eigen::Infinity>() < 1e-12);

    const AxialVector3 tiny(3e-9, -1e-9, 2e-9);
    CHECK((exp_so3(tiny) - series_exp(hat(tiny), 6)).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("exp_so3 is orthogonal and rotates by the axial norm")
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const AxialVector3 theta = random_axial(rng, pi);
        const Mat3 r = exp_so3(theta);
        CHECK((r.transpose() * r - Mat3::Identity()).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK(std::abs(r.determinant() - 1.0) < 1e-12);
        CHECK(is_rotation(r));

        // a vector orthogonal to the axis turns by exactly |theta|
        const Vec3 axis = theta.normalized();
        const Vec3 v = axis.unitOrthogonal();
        const double angle = std::atan2(v.cross(r * v).norm(), v.dot(r * v));
        CHECK(std::abs(angle - theta.norm()) < 1e-10);
    }
}

TEST_CASE("hat and vee")
{
    const Mat3 h = hat(AxialVector3(1, 0, 0));
    Mat3 expected = Mat3::Zero();
    expected(1, 2) = -1.0;
    expected(2, 1) = 1.0;
    CHECK(h == expected);

    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const AxialVector3 t = random_axial(rng, 2.0);
        const Vec3 v = random_axial(rng, 1.0);
        CHECK((hat(t) * v - t.cross(v)).norm() < 1e-15);
        CHECK((vee(hat(t)) - t).norm() == 0.0);
    }
    CHECK_THROWS_AS(vee(Mat3::Identity()), std::invalid_argument);
}

TEST_CASE("rotation_update composes on the right")
{
    std::mt19937_64 rng(11);
    const Rotation3 lambda = exp_so3(random_axial(rng, 2.0));
    CHECK(rotation_update(lambda, AxialVector3::Zero()) == lambda);

    Mat3 quarter;
    quarter << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    CHECK((rotation_update(Mat3::Identity(), AxialVector3(0, 0, pi / 2)) - quarter).norm() < 1e-15);

    const AxialVector3 d = random_axial(rng, 0.5);
    CHECK((rotation_update(lambda, d) - lambda * exp_so3(d)).norm() < 1e-15);
    CHECK(is_rotation(rotation_update(lambda, d)));
}

TEST_CASE("planar rotation and its derivative")
{
    CHECK((rot2(pi / 2) * Vec2(1, 0) - Vec2(0, 1)).norm() < 1e-15);
    const double a = 0.83;
    const double h = 1e-6;
    const Mat2 fd = (rot2(a + h) - rot2(a - h)) / (2 * h);
    CHECK((rot2_prime(a) - fd).norm() < 1e-9);
}

TEST_CASE("section properties")
{
    SectionLaw circle;
    circle.geometry = CircularSection{2.0};
    const SectionProperties c = section_properties(circle);
    CHECK(c.area == doctest::Approx(pi).epsilon(1e-15));
    CHECK(c.inertia == doctest::Approx(pi / 4).epsilon(1e-15));
    CHECK(c.polar == doctest::Approx(pi / 2).epsilon(1e-15));
    CHECK(c.polar == 2.0 * c.inertia);

    SectionLaw square;
    const SectionProperties s = section_properties(square);
    CHECK(s.area == 1.0);
    CHECK(s.inertia == doctest::Approx(1.0 / 12.0).epsilon(1e-15));

    SectionLaw plate;
    plate.geometry = RectangularSection{30.0, 40.0};
    CHECK(section_properties(plate).area == 1200.0);
}

TEST_CASE("section validation")
{
    SectionLaw s;
    s.young = 0.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.young = 1.0;
    s.geometry = RectangularSection{1.0, -1.0};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.geometry = CircularSection{0.0};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("stiffness of the letter section")
{
    SectionLaw s;
    s.young = 12000.0;
    s.shear = 6000.0;
    const SectionStiffness k = stiffness(s);
    CHECK(k.EA() == doctest::Approx(12000.0));
    CHECK(k.GA() == doctest::Approx(6000.0));
    CHECK(k.EI() == doctest::Approx(1000.0));
}

TEST_CASE("stiffness sensitivities match central differences")
{
    SectionLaw rect;
    rect.young = 75000.0;
    rect.shear = 50000.0;
    rect.shear_factor = 5.0 / 6.0;
    rect.geometry = RectangularSection{30.0, 30.0};
    SectionLaw circle;
    circle.young = 210.0;
    circle.shear = 80.0;
    circle.geometry = CircularSection{3.0};

    for (const auto& [section, role, d] : {std::tuple{rect, DesignRole::thickness, 37.0},
                                           std::tuple{circle, DesignRole::diameter, 2.5}}) {
        const double h = 1e-6 * d;
        const SectionStiffness k = stiffness_and_sensitivity(section, role, d);
        const SectionStiffness kp = stiffness_and_sensitivity(section, role, d + h);
        const SectionStiffness km = stiffness_and_sensitivity(section, role, d - h);
        for (int i = 0; i < 3; ++i) {
            const double fc = (kp.C[i] - km.C[i]) / (2 * h);
            const double fd = (kp.D[i] - km.D[i]) / (2 * h);
            CHECK(std::abs(k.dC[i] - fc) <= 1e-8 * std::abs(fc));
            CHECK(std::abs(k.dD[i] - fd) <= 1e-8 * std::abs(fd));
        }
        const auto [area, d_area] = area_and_derivative(section, role, d);
        CHECK(area == doctest::Approx(k.EA() / section.young));
        const double fa = (area_and_derivative(section, role, d + h).first -
                           area_and_derivative(section, role, d - h).first) / (2 * h);
        CHECK(std::abs(d_area - fa) <= 1e-8 * std::abs(fa));
    }
    CHECK_THROWS_AS(stiffness_and_sensitivity(rect, DesignRole::diameter, 1.0), std::invalid_argument);
    CHECK(natural_role(rect) == DesignRole::thickness);
    CHECK(design_dimension(rect, DesignRole::thickness) == 30.0);
}

TEST_CASE("stress resultants")
{
    SectionLaw s;
    s.young = 12000.0;
    s.shear = 6000.0;
    const SectionStiffness k = stiffness(s);

    Strains2D rest;
    rest.reference = {0.02, -0.01, 0.3};
    rest.current = rest.reference;
    const StressResultants2D zero = stress_resultants(rest, k);
    CHECK(zero.axial == 0.0);
    CHECK(zero.shear == 0.0);
    CHECK(zero.moment == 0.0);
    CHECK(stored_energy_density(rest, k) == 0.0);

    Strains2D stretched;
    stretched.current.axial = 0.01;
    const StressResultants2D n = stress_resultants(stretched, k);
    CHECK(n.axial == doctest::Approx(120.0));
    CHECK(stored_energy_density(stretched, k) == doctest::Approx(0.5 * 12000.0 * 1e-4));
}

TEST_CASE("planar strains at rest and under rigid rotation")
{
    const PlanarStrain rest = midpoint_strain({0, 0}, {2, 0}, 0.0, 0.0, 2.0);
    CHECK(std::abs(rest.axial) < 1e-15);
    CHECK(std::abs(rest.shear) < 1e-15);
    CHECK(std::abs(rest.curvature) < 1e-15);

    const double a = 1.1;
    const PlanarStrain turned = midpoint_strain({0, 0}, rot2(a) * Vec2(2, 0), a, a, 2.0);
    CHECK(std::abs(turned.axial) < 1e-15);
    CHECK(std::abs(turned.shear) < 1e-15);
    CHECK(std::abs(turned.curvature) < 1e-15);
}

TEST_CASE("circular arc gives curvature 1/R")
{
    // three-node element on an arc of radius R, cross-sections tangent
    const double radius = 4.0;
    const auto max_stretch = [&](double arc) {
        Vec2 pos[3];
        double ang[3];
        for (int a = 0; a < 3; ++a) {
            const double s = 0.5 * arc * a;
            pos[a] = radius * Vec2(std::sin(s / radius), 1.0 - std::cos(s / radius));
            ang[a] = s / radius;
        }
        double worst = 0.0;
        for (double xi : {-0.5, 0.0, 0.7}) {
            const double N[3] = {0.5 * xi * (xi - 1), 1 - xi * xi, 0.5 * xi * (xi + 1)};
            const double dN[3] = {xi - 0.5, -2 * xi, xi + 0.5};
            const PlanarStrain e = material_strains_2d(pos, ang, N, dN, 0.5 * arc);
            CHECK(e.curvature == doctest::Approx(1.0 / radius).epsilon(1e-14));
            worst = std::max({worst, std::abs(e.axial), std::abs(e.shear)});
        }
        return worst;
    };
    // interpolated positions leave the arc at second order in the element size
    const double coarse = max_stretch(1.5);
    const double fine = max_stretch(0.75);
    CHECK(coarse < 1e-2);
    CHECK(coarse / fine > 3.5);
}

TEST_CASE("strains are objective")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Vec2 pos[3];
        double ang[3];
        for (int a = 0; a < 3; ++a) {
            pos[a] = Vec2(a + 0.2 * u(rng), 0.2 * u(rng));
            ang[a] = 0.3 * u(rng);
        }
        const double xi = u(rng);
        const double N[3] = {0.5 * xi * (xi - 1), 1 - xi * xi, 0.5 * xi * (xi + 1)};
        const double dN[3] = {xi - 0.5, -2 * xi, xi + 0.5};
        const PlanarStrain e = material_strains_2d(pos, ang, N, dN, 1.0);

        const double alpha = 3.0 * u(rng);
        const Vec2 shift(5.0 * u(rng), 5.0 * u(rng));
        Vec2 moved[3];
        double turned[3];
        for (int a = 0; a < 3; ++a) {
            moved[a] = rot2(alpha) * pos[a] + shift;
            turned[a] = ang[a] + alpha;
        }
        const PlanarStrain m = material_strains_2d(moved, turned, N, dN, 1.0);
        CHECK(std::abs(m.axial - e.axial) < 1e-12);
        CHECK(std::abs(m.shear - e.shear) < 1e-12);
        CHECK(std::abs(m.curvature - e.curvature) < 1e-12);
    }
}

TEST_CASE("non-positive jacobian is rejected")
{
    const Vec2 pos[2] = {{0, 0}, {1, 0}};
    const double ang[2] = {0, 0};
    const double N[2] = {0.5, 0.5};
    const double dN[2] = {-0.5, 0.5};
    CHECK_THROWS_AS(material_strains_2d(pos, ang, N, dN, 0.0), std::domain_error);
}

TEST_CASE("virtual strain operator")
{
    const VirtualStrain3 zero = virtual_strain_operator_3d(Mat3::Identity(), Vec3(0.1, 0.2, 0.3), Vec3(1, 2, 3),
                                                           Vec3::Zero(), Vec3::Zero(), Vec3::Zero());
    CHECK(zero.d_eps.norm() == 0.0);
    CHECK(zero.d_omega.norm() == 0.0);

    // d/dt of (Lambda exp(t dtheta))^T (phi' + t dphi') at t = 0
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 20; ++trial) {
        const Rotation3 lambda = exp_so3(random_axial(rng, 2.0));
        const Vec3 phi_prime = 2.0 * random_axial(rng, 1.0) + Vec3(1, 0, 0);
        const Vec3 dphi = random_axial(rng, 1.0);
        const Vec3 dtheta = random_axial(rng, 1.0);
        const Vec3 eps = lambda.transpose() * phi_prime;
        const double h = 1e-6;
        const auto strain = [&](double t) {
            return Vec3(rotation_update(lambda, t * dtheta).transpose() * (phi_prime + t * dphi));
        };
        const Vec3 fd = (strain(h) - strain(-h)) / (2 * h);
        const VirtualStrain3 v = virtual_strain_operator_3d(lambda, eps, Vec3::Zero(), dphi, dtheta, Vec3::Zero());
        CHECK((v.d_eps - fd).norm() < 1e-8 * (1.0 + fd.norm()));
    }
}
