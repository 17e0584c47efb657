#pragma once

#include "tsplat/mixture.hpp"

#include <Eigen/LU>

#include <random>

namespace tsplat::support {

inline Vec4 random_quaternion(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return Vec4(n(rng), n(rng), n(rng), n(rng)).normalized();
}

/// Component in front of a camera at the origin looking down +z, within a unit-ish frustum.
inline TComponent random_component(std::mt19937_64& rng, int sh_degree = 0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TComponent c;
    c.position = Vec3(0.6 * u(rng), 0.6 * u(rng), 3.0 + 0.5 * u(rng));
    c.log_scale = Vec3(-1.6 + 0.4 * u(rng), -1.6 + 0.4 * u(rng), -1.6 + 0.4 * u(rng));
    c.rotation = random_quaternion(rng);
    c.raw_nu = 2.0 * u(rng) + 1.0;
    c.raw_opacity = 1.2 * u(rng);
    c.sh.assign(sh_coeff_count(sh_degree), Vec3::Zero());
    for (auto& s : c.sh) s = Vec3(u(rng), u(rng), u(rng));
    return c;
}

inline Mixture random_mixture(std::mt19937_64& rng, int count, int sh_degree = 0) {
    Mixture m;
    m.sh_degree = sh_degree;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    m.background = Vec3(0.2 * u(rng), 0.2 * u(rng), 0.2 * u(rng));
    for (int i = 0; i < count; ++i) m.components.push_back(random_component(rng, sh_degree));
    return m;
}

/// Camera at the origin looking down +z; the frustum at z = 3 spans roughly [-1, 1].
inline Camera square_camera(int size) {
    Camera cam;
    cam.width = cam.height = size;
    cam.fx = cam.fy = 1.4 * size;
    cam.cx = cam.cy = 0.5 * (size - 1);
    return cam;
}

}  // namespace tsplat::support
