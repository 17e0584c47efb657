#pragma once

#include "tsplat/config.hpp"
#include "tsplat/image.hpp"
#include "tsplat/mixture.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsplat {

enum class SceneErrorKind {
    kMissingFile,
    kMalformedJson,
    kDimensionMismatch,
    kMissingPositions,
    kInvalid,
};

class SceneError : public std::runtime_error {
public:
    SceneError(SceneErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    SceneErrorKind kind() const { return kind_; }

private:
    SceneErrorKind kind_;
};

struct SceneCamera {
    Camera camera;
    std::filesystem::path image_path;
    Image image;
    bool train = true;
};

struct ScenePoint {
    Vec3 position = Vec3::Zero();
    Vec3 color = Vec3::Constant(0.5);
};

struct SceneSpec {
    double extent = 1.0;
    std::vector<SceneCamera> cameras;
    std::vector<ScenePoint> points;
    Vec3 background = Vec3::Zero();

    std::vector<std::size_t> train_indices() const;
    std::vector<std::size_t> test_indices() const;
};

/// Reads the scene JSON, its images and its PLY point file. Relative paths resolve against
/// the directory of the JSON file.
SceneSpec load_scene(const std::filesystem::path& path);

/// ASCII PLY vertices: x, y, z and optionally red, green, blue (integers are divided by 255).
std::vector<ScenePoint> read_ply_points(const std::filesystem::path& path);

/// One isotropic component per point, scaled by the mean distance to its three nearest
/// neighbours (1% of the extent for a single point), with nu and opacity from `config`.
Mixture init_mixture(const SceneSpec& scene, const TrainConfig& config);

}  // namespace tsplat
