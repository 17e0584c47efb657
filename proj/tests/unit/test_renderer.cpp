#include "helpers.hpp"
#include "oracles.hpp"
#include "tsplat/renderer.hpp"
#include "tsplat/sh.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tsplat;

namespace {

Projected2D disc(double x, double y, double radius, double depth) {
    Projected2D p;
    p.mean2d = Vec2(x, y);
    p.cutoff_radius_px = radius;
    p.depth = depth;
    return p;
}

CompositeEntry entry(double color, double opacity, double density, double depth = 0.0) {
    CompositeEntry e;
    e.color = Vec3::Constant(color);
    e.opacity = opacity;
    e.density = density;
    e.depth = depth;
    return e;
}

}  // namespace

TEST(Composite, EmptyListGivesBackground) {
    const auto r = composite_pixel({}, Vec3(0.1, 0.2, 0.3));
    EXPECT_EQ(r.rgb, Vec3(0.1, 0.2, 0.3));
    EXPECT_EQ(r.transmittance, 1.0);
    EXPECT_EQ(r.count, 0u);
}

TEST(Composite, SingleEntry) {
    const std::vector<CompositeEntry> e{entry(1.0, 0.5, 1.0)};
    const auto r = composite_pixel(e, Vec3::Zero());
    EXPECT_EQ(r.rgb, Vec3::Constant(0.5));
    EXPECT_EQ(r.transmittance, 0.5);
}

TEST(Composite, NegativeOpacityScoops) {
    const std::vector<CompositeEntry> e{entry(1.0, 0.8, 1.0, 1.0), entry(1.0, -0.5, 1.0, 2.0)};
    const auto r = composite_pixel(e, Vec3::Zero());
    EXPECT_NEAR(r.rgb.x(), 0.7, 1e-15);
    EXPECT_NEAR(r.transmittance, 0.3, 1e-15);
}

TEST(Composite, EarlyStopAfterFloor) {
    const std::vector<CompositeEntry> e{entry(1.0, 0.99999, 1.0), entry(0.0, 0.5, 1.0)};
    CompositeOptions opt;
    opt.early_stop = true;
    const auto r = composite_pixel(e, Vec3::Zero(), opt);
    EXPECT_EQ(r.count, 1u);
    EXPECT_EQ(composite_pixel(e, Vec3::Zero()).count, 2u);
}

TEST(Binning, EmptyInput) {
    const auto b = sort_and_bin({}, 40, 20, 16);
    EXPECT_EQ(b.tiles_x, 3);
    EXPECT_EQ(b.tiles_y, 2);
    for (const auto& t : b.tiles) EXPECT_TRUE(t.empty());
}

TEST(Binning, DiscInsideOneTile) {
    const std::vector<std::optional<Projected2D>> p{disc(20.0, 5.0, 2.0, 1.0)};
    const auto b = sort_and_bin(p, 48, 32, 16);
    for (int ty = 0; ty < b.tiles_y; ++ty) {
        for (int tx = 0; tx < b.tiles_x; ++tx) {
            EXPECT_EQ(b.tile(tx, ty).size(), (tx == 1 && ty == 0) ? 1u : 0u);
        }
    }
}

TEST(Binning, AscendingDepth) {
    const std::vector<std::optional<Projected2D>> p{disc(8.0, 8.0, 3.0, 2.0), std::nullopt,
                                                    disc(9.0, 7.0, 3.0, 1.0)};
    const auto b = sort_and_bin(p, 16, 16, 16);
    ASSERT_EQ(b.tile(0, 0).size(), 2u);
    EXPECT_EQ(b.tile(0, 0)[0], 2u);
    EXPECT_EQ(b.tile(0, 0)[1], 0u);
}

TEST(Binning, DepthTiesKeepIndexOrder) {
    const std::vector<std::optional<Projected2D>> p{disc(8.0, 8.0, 3.0, 1.0), disc(8.0, 8.0, 3.0, 1.0)};
    const auto b = sort_and_bin(p, 16, 16, 16);
    ASSERT_EQ(b.tile(0, 0).size(), 2u);
    EXPECT_EQ(b.tile(0, 0)[0], 0u);
}

TEST(Binning, RejectsBadSizes) { EXPECT_THROW(sort_and_bin({}, 16, 16, 0), std::invalid_argument); }

TEST(Render, EmptyMixtureIsBackground) {
    Mixture m;
    m.background = Vec3(0.25, 0.5, 0.75);
    const auto fb = render(m, support::square_camera(20), {});
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) EXPECT_EQ(fb.rgb.pixel(x, y), m.background);
}

TEST(Render, BrightestPixelAtPrincipalPoint) {
    Mixture m;
    TComponent c;
    c.position = Vec3(0, 0, 3);
    c.log_scale = Vec3::Constant(std::log(0.2));
    c.raw_nu = raw_nu_for(9000.0);
    c.raw_opacity = raw_opacity_for(0.8);
    c.sh.assign(1, rgb_to_sh_dc(Vec3::Constant(0.9)));
    m.components.push_back(c);
    Camera cam = support::square_camera(33);
    const auto fb = render(m, cam, {});
    int bx = -1, by = -1;
    double best = -1.0;
    for (int y = 0; y < 33; ++y)
        for (int x = 0; x < 33; ++x)
            if (fb.rgb.at(x, y, 0) > best) {
                best = fb.rgb.at(x, y, 0);
                bx = x;
                by = y;
            }
    EXPECT_EQ(bx, 16);
    EXPECT_EQ(by, 16);
}

TEST(Render, MatchesReferenceComposite) {
    std::mt19937_64 rng(21);
    for (int scene = 0; scene < 5; ++scene) {
        const Mixture m = support::random_mixture(rng, 20, scene % 2);
        const Camera cam = support::square_camera(32);
        RenderSettings s;
        s.early_stop = false;
        const auto fb = render(m, cam, s);
        oracle::ReferenceOptions opt;
        const Image ref = oracle::reference_composite(m, cam, opt);
        for (std::size_t i = 0; i < ref.data.size(); ++i) EXPECT_NEAR(fb.rgb.data[i], ref.data[i], 1e-12);
    }
}

TEST(Render, TileSizeDoesNotChangeImage) {
    std::mt19937_64 rng(22);
    const Mixture m = support::random_mixture(rng, 30);
    const Camera cam = support::square_camera(37);
    RenderSettings a, b;
    a.tile_size = 16;
    b.tile_size = 5;
    EXPECT_EQ(render(m, cam, a).raw_rgb.data, render(m, cam, b).raw_rgb.data);
}

TEST(Render, ThreadCountDoesNotChangeImage) {
    std::mt19937_64 rng(23);
    const Mixture m = support::random_mixture(rng, 30);
    const Camera cam = support::square_camera(40);
    RenderSettings a, b;
    a.threads = 1;
    b.threads = 4;
    EXPECT_EQ(render(m, cam, a).raw_rgb.data, render(m, cam, b).raw_rgb.data);
}

TEST(Render, NegativeComponentDarkensCentre) {
    Mixture m;
    TComponent ring;
    ring.position = Vec3(0, 0, 3);
    ring.log_scale = Vec3::Constant(std::log(0.4));
    ring.raw_opacity = raw_opacity_for(0.9);
    ring.raw_nu = raw_nu_for(50.0);
    ring.sh.assign(1, rgb_to_sh_dc(Vec3::Constant(1.0)));
    m.components.push_back(ring);
    const Camera cam = support::square_camera(33);
    const double before = render(m, cam, {}).rgb.at(16, 16, 0);
    TComponent hole = ring;
    hole.position.z() = 2.9;
    hole.log_scale = Vec3::Constant(std::log(0.1));
    hole.raw_opacity = raw_opacity_for(-0.9);
    // centre value is 1.9 * 0.9 - 0.9 * c, so the hole colour has to exceed the ring's to cut it
    hole.sh.assign(1, rgb_to_sh_dc(Vec3::Constant(1.8)));
    m.components.push_back(hole);
    const auto fb = render(m, cam, {});
    EXPECT_LT(fb.rgb.at(16, 16, 0), 0.5 * before);
    EXPECT_NEAR(fb.rgb.at(1, 16, 0), render(Mixture{{ring}, 0, Vec3::Zero()}, cam, {}).rgb.at(1, 16, 0), 1e-3);
}

TEST(Render, TinyFootprintIsSkipped) {
    Mixture m;
    TComponent c;
    c.position = Vec3(0, 0, 3);
    c.log_scale = Vec3::Constant(std::log(1e-5));
    c.raw_opacity = raw_opacity_for(0.9);
    c.sh.assign(1, Vec3::Constant(1.0));
    m.components.push_back(c);
    const auto ctx = prepare_frame(m, support::square_camera(16), {});
    EXPECT_FALSE(ctx.components[0].has_value());
}

TEST(Render, RejectsShDegreeAboveStored) {
    Mixture m;
    RenderSettings s;
    s.active_sh_degree = 1;
    EXPECT_THROW(render(m, support::square_camera(8), s), std::invalid_argument);
}

TEST(Sh, DegreeZero) {
    const std::vector<Vec3> c{Vec3(0.3, -0.1, -3.0)};
    const Vec3 rgb = sh_to_color(c, Vec3(0, 0, 1), 0);
    EXPECT_NEAR(rgb.x(), 0.3 * 0.2820948 + 0.5, 1e-7);
    EXPECT_NEAR(rgb.y(), -0.1 * 0.2820948 + 0.5, 1e-7);
    EXPECT_EQ(rgb.z(), 0.0);
    EXPECT_EQ(sh_to_color(c, Vec3(0.3, -0.8, 0.1).normalized(), 0), rgb);
}

TEST(Sh, DegreeOneZCoefficientIsOdd) {
    std::vector<Vec3> c(4, Vec3::Zero());
    c[2] = Vec3::Constant(0.5);
    const double up = sh_to_color(c, Vec3(0, 0, 1), 1).x() - 0.5;
    const double down = sh_to_color(c, Vec3(0, 0, -1), 1).x() - 0.5;
    EXPECT_LT(up * down, 0.0);
    EXPECT_NEAR(up, -down, 1e-15);
}

TEST(Sh, DcRoundTrip) {
    const Vec3 rgb(0.1, 0.6, 0.95);
    const std::vector<Vec3> c{rgb_to_sh_dc(rgb)};
    EXPECT_LT((sh_to_color(c, Vec3(1, 0, 0), 0) - rgb).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Sh, BasisGradientMatchesFiniteDifference) {
    const Vec3 d = Vec3(0.3, -0.5, 0.8).normalized();
    const auto g = sh_basis_gradient(d, 3);
    for (int k = 0; k < 16; ++k) {
        for (int a = 0; a < 3; ++a) {
            const double fd = oracle::central_difference(
                [&](double v) {
                    Vec3 e = d;
                    e[a] = v;
                    return sh_basis(e, 3)[k];
                },
                d[a]);
            EXPECT_NEAR(g[k][a], fd, 1e-8) << k << " " << a;
        }
    }
}

TEST(Sh, RejectsMissingCoefficients) {
    const std::vector<Vec3> c{Vec3::Zero()};
    EXPECT_THROW(sh_to_color(c, Vec3(0, 0, 1), 1), std::invalid_argument);
}
