#include "oracles.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tsplat::oracle {

namespace {

struct Simpson {
    const std::function<double(double)>& f;
    double tol;
    int budget;
    int used = 0;
    bool exhausted = false;
    double err = 0.0;

    double run(double a, double b) {
        const double m = 0.5 * (a + b);
        const double fa = f(a), fm = f(m), fb = f(b);
        return refine(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 0);
    }

    double refine(double a, double b, double fa, double fm, double fb, double whole, double eps, int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = f(lm), frm = f(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double delta = left + right - whole;
        if (std::abs(delta) <= 15.0 * eps || depth >= 60) {
            err += std::abs(delta) / 15.0;
            return left + right + delta / 15.0;
        }
        if (++used > budget) {
            exhausted = true;
            err += std::abs(delta) / 15.0;
            return left + right + delta / 15.0;
        }
        return refine(a, m, fa, flm, fm, left, 0.5 * eps, depth + 1) +
               refine(m, b, fm, frm, fb, right, 0.5 * eps, depth + 1);
    }
};

// Integral over [c - half, c + half] split into panels whose widths double away from c.
QuadResult integrate_around(const std::function<double(double)>& f, double c, double width, double scale,
                            const QuadratureSpec& spec) {
    if (!(spec.tolerance > 0.0)) throw std::invalid_argument("quadrature: tolerance must be positive");
    std::vector<double> edges{0.0};
    for (double w = 0.25 * width; w < spec.half_width; w *= 2.0) edges.push_back(w);
    edges.push_back(spec.half_width);
    const int panels = 2 * static_cast<int>(edges.size() - 1);
    const double panel_tol = spec.tolerance * scale / panels;

    QuadResult out;
    double sum = 0.0, err = 0.0;
    bool exhausted = false;
    int budget = spec.max_subdivisions;
    for (int side : {-1, 1}) {
        for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
            Simpson s{f, panel_tol, budget};
            const double a = c + side * edges[k], b = c + side * edges[k + 1];
            sum += side > 0 ? s.run(a, b) : s.run(b, a);
            err += s.err;
            budget -= s.used;
            exhausted = exhausted || s.exhausted;
        }
    }
    out.value = sum;
    out.error_bound = err;
    out.converged = !exhausted && err <= spec.tolerance * scale;
    return out;
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Mat3 rotation_of(Vec4 q) {
    const double n = q.norm();
    q = n > 0.0 ? Vec4(q / n) : Vec4(1, 0, 0, 0);
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

struct Splat {
    std::size_t index;
    double depth;
    Vec2 mean;
    double a, b, c, det;  // cov2d entries [[a, b], [b, c]]
    double nu;
    double cutoff;        // squared Mahalanobis level
    double opacity;
    Vec3 color;
};

}  // namespace

double t3(const Vec3& x, const Vec3& mu, const Mat3& sigma, double nu) {
    const Vec3 d = x - mu;
    const double h = d.dot(sigma.inverse() * d);
    return std::pow(1.0 + h / nu, -(nu + 3.0) / 2.0);
}

QuadResult quad_ray_integral(const Vec3& mu, const Mat3& sigma, double nu, const Vec3& origin,
                             const Vec3& direction, const QuadratureSpec& spec) {
    if (std::abs(direction.norm() - 1.0) > 1e-12) throw std::invalid_argument("quad_ray_integral: direction must be unit");
    const Mat3 inv = sigma.inverse();
    const double a = direction.dot(inv * direction);
    const double s0 = direction.dot(inv * (mu - origin)) / a;
    const double width = 1.0 / std::sqrt(a);
    const auto f = [&](double s) { return t3(origin + s * direction, mu, sigma, nu); };
    const double scale = std::max(f(s0) * width, 1e-300);
    QuadResult out = integrate_around(f, s0, width, scale, spec);
    // T <= (a u^2 / nu)^(-(nu+3)/2) for |u| = |s - s0| beyond the window, integrated on both sides
    const double m = 0.5 * (nu + 3.0);
    out.tail_bound = 2.0 * std::pow(a / nu, -m) * std::pow(spec.half_width, 1.0 - 2.0 * m) / (2.0 * m - 1.0);
    out.error_bound += out.tail_bound;
    return out;
}

QuadResult quad_relocation_integral(double o, double sigma2, double nu, int n, const QuadratureSpec& spec) {
    if (!(std::abs(o) < 1.0)) throw std::invalid_argument("quad_relocation_integral: |o| must be < 1");
    if (n < 1) throw std::invalid_argument("quad_relocation_integral: N must be >= 1");
    const double m = 0.5 * (nu + 3.0);
    const auto f = [&](double x) {
        const double t = std::pow(1.0 + x * x / (nu * sigma2), -m);
        return -std::expm1(n * std::log1p(-o * t));
    };
    const double width = std::sqrt(sigma2);
    const double scale = std::max(std::abs(f(0.0)) * width, 1e-300);
    QuadResult out = integrate_around(f, 0.0, width, scale, spec);
    const double bound_coeff = n * std::abs(o) * std::pow(1.0 + std::abs(o), n - 1);
    out.tail_bound = 2.0 * bound_coeff * std::pow(nu * sigma2, m) * std::pow(spec.half_width, 1.0 - 2.0 * m) /
                     (2.0 * m - 1.0);
    out.error_bound += out.tail_bound;
    return out;
}

double relocation_integral_closed_form(double o, double sigma2, double nu) {
    const double beta = std::exp(std::lgamma(0.5) + std::lgamma((nu + 2.0) / 2.0) - std::lgamma((nu + 3.0) / 2.0));
    return o * std::sqrt(nu * sigma2) * beta;
}

double central_difference(const std::function<double(double)>& f, double x, double step_scale) {
    const double h = 1e-6 * std::max(1.0, std::abs(x)) * step_scale;
    const double xp = x + h, xm = x - h;
    return (f(xp) - f(xm)) / (xp - xm);
}

double richardson_difference(const std::function<double(double)>& f, double x, double step_scale) {
    const double d1 = central_difference(f, x, step_scale);
    const double d2 = central_difference(f, x, 0.5 * step_scale);
    return (4.0 * d2 - d1) / 3.0;
}

std::vector<double> finite_diff(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> theta, double step_scale) {
    std::vector<double> g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double x0 = theta[i];
        g[i] = central_difference(
            [&](double x) {
                theta[i] = x;
                return f(theta);
            },
            x0, step_scale);
        theta[i] = x0;
    }
    return g;
}

Image reference_composite_raw(const Mixture& mixture, const Camera& cam, const ReferenceOptions& opt) {
    if (mixture.sh_degree > 1) throw std::invalid_argument("reference_composite: SH degree above 1");
    constexpr double c0 = 0.28209479177387814;
    constexpr double c1 = 0.4886025119029199;
    const Vec3 eye = -cam.rotation_wc.transpose() * cam.translation_wc;

    std::vector<Splat> splats;
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        const TComponent& comp = mixture.components[i];
        const Vec3 p = cam.rotation_wc * comp.position + cam.translation_wc;
        if (p.z() <= cam.z_near) continue;
        const Mat3 r = rotation_of(comp.rotation);
        const Vec3 s2 = (2.0 * comp.log_scale).array().exp();
        const Mat3 sigma = r * s2.asDiagonal() * r.transpose();
        Mat23 j;
        j << cam.fx / p.z(), 0.0, -cam.fx * p.x() / (p.z() * p.z()),
            0.0, cam.fy / p.z(), -cam.fy * p.y() / (p.z() * p.z());
        const Mat2 cov = j * cam.rotation_wc * sigma * cam.rotation_wc.transpose() * j.transpose();
        Splat sp;
        sp.index = i;
        sp.depth = p.z();
        sp.mean = Vec2(cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy);
        sp.a = cov(0, 0);
        sp.c = cov(1, 1);
        sp.b = 0.5 * (cov(0, 1) + cov(1, 0));
        sp.det = sp.a * sp.c - sp.b * sp.b;
        if (!(sp.det > 0.0)) continue;
        sp.nu = std::min(1.0 + softplus(comp.raw_nu), 10000.0);
        sp.cutoff = sp.nu * (std::pow(opt.tau, -2.0 / (sp.nu + 2.0)) - 1.0);
        const double lmax = 0.5 * (sp.a + sp.c) + std::sqrt(0.25 * (sp.a - sp.c) * (sp.a - sp.c) + sp.b * sp.b);
        if (!(std::sqrt(sp.cutoff * lmax) >= opt.min_radius_px)) continue;
        sp.opacity = std::tanh(comp.raw_opacity);
        Vec3 col = Vec3::Constant(0.5) + c0 * comp.sh[0];
        if (mixture.sh_degree == 1) {
            const Vec3 v = comp.position - eye;
            const Vec3 d = v.norm() > 0.0 ? Vec3(v / v.norm()) : Vec3(0, 0, 1);
            col += -c1 * d.y() * comp.sh[1] + c1 * d.z() * comp.sh[2] - c1 * d.x() * comp.sh[3];
        }
        sp.color = col.cwiseMax(0.0);
        splats.push_back(sp);
    }
    std::stable_sort(splats.begin(), splats.end(), [](const Splat& l, const Splat& r) {
        return l.depth < r.depth || (l.depth == r.depth && l.index < r.index);
    });

    Image out(cam.width, cam.height);
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            Vec3 acc = Vec3::Zero();
            double w = 1.0;
            for (const auto& sp : splats) {
                const double dx = x - sp.mean.x(), dy = y - sp.mean.y();
                const double h = (sp.c * dx * dx - 2.0 * sp.b * dx * dy + sp.a * dy * dy) / sp.det;
                if (h > sp.cutoff) continue;
                const double alpha = sp.opacity * std::pow(1.0 + h / sp.nu, -(sp.nu + 2.0) / 2.0);
                acc += w * alpha * sp.color;
                w *= 1.0 - alpha;
                if (opt.early_stop && w < opt.transmittance_floor) break;
            }
            out.set_pixel(x, y, acc + w * mixture.background);
        }
    }
    return out;
}

Image reference_composite(const Mixture& mixture, const Camera& camera, const ReferenceOptions& options) {
    Image img = reference_composite_raw(mixture, camera, options);
    for (auto& v : img.data) v = std::clamp(v, 0.0, 1.0);
    return img;
}

}  // namespace tsplat::oracle
