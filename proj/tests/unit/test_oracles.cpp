#include "helpers.hpp"
#include "oracles.hpp"
#include "tsplat/renderer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace tsplat;

TEST(QuadRay, CauchyAxisIntegral) {
    const auto q = oracle::quad_ray_integral(Vec3::Zero(), Mat3::Identity(), 1.0, Vec3(0, 0, -5), Vec3(0, 0, 1));
    ASSERT_TRUE(q.converged);
    EXPECT_NEAR(q.value, std::numbers::pi / 2.0, q.error_bound + 1e-12);
    EXPECT_LT(q.error_bound, 1e-6);
}

TEST(QuadRay, FarRayIsNegligible) {
    const auto q = oracle::quad_ray_integral(Vec3::Zero(), 0.01 * Mat3::Identity(), 1000.0, Vec3(5, 0, -5),
                                             Vec3(0, 0, 1));
    ASSERT_TRUE(q.converged);
    EXPECT_LT(std::abs(q.value), 1e-9);
}

TEST(QuadRay, ReportsNonConvergence) {
    oracle::QuadratureSpec spec;
    spec.max_subdivisions = 3;
    spec.tolerance = 1e-14;
    const auto q = oracle::quad_ray_integral(Vec3::Zero(), Mat3::Identity(), 1.0, Vec3(0, 0, -5), Vec3(0, 0, 1), spec);
    EXPECT_FALSE(q.converged);
    EXPECT_THROW(oracle::quad_ray_integral(Vec3::Zero(), Mat3::Identity(), 1.0, Vec3::Zero(), Vec3(0, 0, 2)),
                 std::invalid_argument);
}

TEST(QuadRelocation, SingleLayerClosedForm) {
    for (double nu : {1.0, 5.0, 100.0}) {
        const auto q = oracle::quad_relocation_integral(0.6, 0.8, nu, 1);
        ASSERT_TRUE(q.converged);
        const double exact = oracle::relocation_integral_closed_form(0.6, 0.8, nu);
        EXPECT_NEAR(q.value, exact, q.error_bound + 1e-9 * exact) << nu;
    }
}

TEST(QuadRelocation, ZeroOpacity) {
    EXPECT_EQ(oracle::quad_relocation_integral(0.0, 1.0, 3.0, 4).value, 0.0);
    EXPECT_THROW(oracle::quad_relocation_integral(1.0, 1.0, 3.0, 1), std::invalid_argument);
}

TEST(FiniteDiff, QuadraticIsExact) {
    const auto f = [](const std::vector<double>& x) { return 3.0 * x[0] * x[0] - 2.0 * x[0] * x[1] + 0.5 * x[1] + 7.0; };
    const auto g = oracle::finite_diff(f, {1.5, -2.0});
    // exact up to rounding of f / step, with f ~ 10 and step ~ 1e-6
    EXPECT_NEAR(g[0], 6.0 * 1.5 + 4.0, 1e-8);
    EXPECT_NEAR(g[1], -3.0 + 0.5, 1e-8);
}

TEST(FiniteDiff, StepHalvingIsSecondOrder) {
    const auto f = [](double x) { return std::sin(3.0 * x); };
    const double exact = 3.0 * std::cos(3.0 * 0.7);
    const double e1 = std::abs(oracle::central_difference(f, 0.7, 1000.0) - exact);
    const double e2 = std::abs(oracle::central_difference(f, 0.7, 500.0) - exact);
    EXPECT_NEAR(e1 / e2, 4.0, 0.1);
    EXPECT_LT(std::abs(oracle::richardson_difference(f, 0.7, 1000.0) - exact), 1e-10);
}

TEST(ReferenceComposite, EmptyMixtureIsBackground) {
    Mixture m;
    m.background = Vec3(0.3, 0.2, 0.1);
    const Image img = oracle::reference_composite(m, support::square_camera(6));
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) EXPECT_EQ(img.pixel(x, y), m.background);
}

TEST(ReferenceComposite, SingleComponentByHand) {
    Mixture m;
    TComponent c;
    c.position = Vec3(0, 0, 2);
    c.log_scale = Vec3::Constant(std::log(0.5));
    c.raw_opacity = std::atanh(0.6);
    c.raw_nu = raw_nu_for(4.0);
    c.sh.assign(1, Vec3(0.2, 0.0, -0.2) / 0.28209479177387814);
    m.components.push_back(c);
    m.background = Vec3::Constant(0.1);
    Camera cam;
    cam.width = cam.height = 5;
    cam.fx = cam.fy = 4.0;
    cam.cx = cam.cy = 2.0;
    const Image img = oracle::reference_composite(m, cam);
    // cov2d = (fx / z)^2 * 0.25 = 1; pixel (3, 2) sits at h = 1
    const double t = std::pow(1.0 + 1.0 / 4.0, -3.0);
    const Vec3 color(0.7, 0.5, 0.3);
    const Vec3 expected = 0.6 * t * color + (1.0 - 0.6 * t) * m.background;
    EXPECT_LT((img.pixel(3, 2) - expected).norm(), 1e-14);
}

TEST(ReferenceComposite, RejectsHighShDegree) {
    Mixture m;
    m.sh_degree = 2;
    EXPECT_THROW(oracle::reference_composite(m, support::square_camera(4)), std::invalid_argument);
}
