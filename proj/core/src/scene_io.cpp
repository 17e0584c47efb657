#include "tsplat/scene_io.hpp"

#include "tsplat/sh.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tsplat {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::size_t> SceneSpec::train_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cameras.size(); ++i)
        if (cameras[i].train) out.push_back(i);
    return out;
}

std::vector<std::size_t> SceneSpec::test_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cameras.size(); ++i)
        if (!cameras[i].train) out.push_back(i);
    return out;
}

namespace {

[[noreturn]] void fail(SceneErrorKind kind, const std::string& msg) { throw SceneError(kind, msg); }

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) fail(SceneErrorKind::kMalformedJson, where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(SceneErrorKind::kMalformedJson, where + ": field '" + key + "': " + e.what());
    }
}

SceneCamera parse_camera(const json& j, const fs::path& base, std::size_t index) {
    const std::string where = "camera " + std::to_string(index);
    SceneCamera sc;
    Camera& cam = sc.camera;
    cam.width = field<int>(j, "width", where);
    cam.height = field<int>(j, "height", where);
    cam.fx = field<double>(j, "fx", where);
    cam.fy = field<double>(j, "fy", where);
    cam.cx = field<double>(j, "cx", where);
    cam.cy = field<double>(j, "cy", where);
    const auto r = field<std::vector<double>>(j, "rotation_wc", where);
    const auto t = field<std::vector<double>>(j, "translation_wc", where);
    if (r.size() != 9 || t.size() != 3) {
        fail(SceneErrorKind::kMalformedJson, where + ": rotation_wc needs 9 and translation_wc 3 values");
    }
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) cam.rotation_wc(a, b) = r[3 * a + b];
        cam.translation_wc[a] = t[a];
    }
    const std::string split = j.value("split", std::string("train"));
    if (split != "train" && split != "test") {
        fail(SceneErrorKind::kMalformedJson, where + ": split must be 'train' or 'test'");
    }
    sc.train = split == "train";
    try {
        validate_camera(cam);
    } catch (const std::invalid_argument& e) {
        fail(SceneErrorKind::kInvalid, where + ": " + e.what());
    }

    sc.image_path = base / field<std::string>(j, "image", where);
    if (!fs::exists(sc.image_path)) {
        fail(SceneErrorKind::kMissingFile, where + ": image not found: " + sc.image_path.string());
    }
    try {
        sc.image = read_ppm(sc.image_path);
    } catch (const std::exception& e) {
        fail(SceneErrorKind::kInvalid, where + ": " + e.what());
    }
    if (sc.image.width != cam.width || sc.image.height != cam.height) {
        std::ostringstream os;
        os << where << ": image is " << sc.image.width << "x" << sc.image.height
           << " but the camera declares " << cam.width << "x" << cam.height;
        fail(SceneErrorKind::kDimensionMismatch, os.str());
    }
    return sc;
}

}  // namespace

std::vector<ScenePoint> read_ply_points(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(SceneErrorKind::kMissingFile, "point file not found: " + path.string());

    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
        fail(SceneErrorKind::kInvalid, path.string() + ": not a PLY file");
    }
    struct Element {
        std::string name;
        std::size_t count = 0;
        std::vector<std::pair<std::string, std::string>> props;  // (type, name)
        bool has_list = false;
    };
    std::vector<Element> elements;
    bool ascii = false, header_done = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            ascii = fmt == "ascii";
        } else if (word == "element") {
            Element e;
            ls >> e.name >> e.count;
            elements.push_back(e);
        } else if (word == "property") {
            if (elements.empty()) fail(SceneErrorKind::kInvalid, path.string() + ": property before element");
            std::string type, name;
            ls >> type;
            if (type == "list") {
                elements.back().has_list = true;
                std::string t1, t2;
                ls >> t1 >> t2;
            }
            ls >> name;
            elements.back().props.emplace_back(type, name);
        } else if (word == "end_header") {
            header_done = true;
            break;
        }
    }
    if (!header_done) fail(SceneErrorKind::kInvalid, path.string() + ": missing end_header");
    if (!ascii) fail(SceneErrorKind::kInvalid, path.string() + ": only ASCII PLY is supported");

    std::vector<ScenePoint> points;
    for (const auto& e : elements) {
        if (e.name != "vertex") {
            for (std::size_t i = 0; i < e.count; ++i) std::getline(in, line);
            continue;
        }
        int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
        bool color_is_int = true;
        for (int p = 0; p < static_cast<int>(e.props.size()); ++p) {
            const auto& [type, name] = e.props[p];
            if (name == "x") ix = p;
            if (name == "y") iy = p;
            if (name == "z") iz = p;
            if (name == "red") ir = p;
            if (name == "green") ig = p;
            if (name == "blue") ib = p;
            if (name == "red") color_is_int = type != "float" && type != "double" && type != "float32";
        }
        if (ix < 0 || iy < 0 || iz < 0) {
            fail(SceneErrorKind::kMissingPositions, path.string() + ": vertex element lacks x/y/z");
        }
        if (e.has_list) fail(SceneErrorKind::kInvalid, path.string() + ": list properties on vertices");
        const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;
        for (std::size_t i = 0; i < e.count; ++i) {
            if (!std::getline(in, line)) fail(SceneErrorKind::kInvalid, path.string() + ": truncated vertex list");
            std::istringstream ls(line);
            std::vector<double> v(e.props.size());
            for (auto& x : v) {
                if (!(ls >> x)) fail(SceneErrorKind::kInvalid, path.string() + ": bad vertex line " + std::to_string(i));
            }
            ScenePoint p;
            p.position = Vec3(v[ix], v[iy], v[iz]);
            if (has_color) {
                p.color = Vec3(v[ir], v[ig], v[ib]);
                if (color_is_int) p.color /= 255.0;
            }
            points.push_back(p);
        }
        return points;
    }
    fail(SceneErrorKind::kMissingPositions, path.string() + ": no vertex element");
}

SceneSpec load_scene(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(SceneErrorKind::kMissingFile, "scene file not found: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(SceneErrorKind::kMalformedJson, path.string() + ": " + e.what());
    }
    if (!j.is_object()) fail(SceneErrorKind::kMalformedJson, path.string() + ": top level must be an object");

    const fs::path base = path.parent_path();
    SceneSpec scene;
    scene.extent = field<double>(j, "extent", "scene");
    if (!(scene.extent > 0.0)) fail(SceneErrorKind::kInvalid, "scene: extent must be positive");
    if (j.contains("background")) {
        const auto bg = field<std::vector<double>>(j, "background", "scene");
        if (bg.size() != 3) fail(SceneErrorKind::kMalformedJson, "scene: background needs 3 values");
        scene.background = Vec3(bg[0], bg[1], bg[2]);
    }
    const auto cams = j.find("cameras");
    if (cams == j.end() || !cams->is_array()) fail(SceneErrorKind::kMalformedJson, "scene: 'cameras' must be an array");
    for (std::size_t i = 0; i < cams->size(); ++i) scene.cameras.push_back(parse_camera((*cams)[i], base, i));
    if (scene.train_indices().empty()) fail(SceneErrorKind::kInvalid, "scene: no training camera");

    scene.points = read_ply_points(base / field<std::string>(j, "points", "scene"));
    return scene;
}

Mixture init_mixture(const SceneSpec& scene, const TrainConfig& config) {
    const std::size_t n = scene.points.size();
    if (n == 0) throw std::invalid_argument("init_mixture: empty point set");

    Mixture m;
    m.sh_degree = config.max_sh_degree;
    m.background = scene.background;
    m.components.resize(n);
    const double fallback = 0.01 * scene.extent;
    const double raw_nu = raw_nu_for(config.nu_init);
    const double raw_o = raw_opacity_for(config.opacity_init);

    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            dist[j] = (scene.points[i].position - scene.points[j].position).norm();
        }
        dist[i] = std::numeric_limits<double>::infinity();
        const std::size_t k = std::min<std::size_t>(3, n - 1);
        double scale = fallback;
        if (k > 0) {
            std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
            double s = 0.0;
            for (std::size_t q = 0; q < k; ++q) s += dist[q];
            if (s > 0.0) scale = s / k;
        }
        TComponent& c = m.components[i];
        c.position = scene.points[i].position;
        c.log_scale = Vec3::Constant(std::log(scale));
        c.raw_nu = raw_nu;
        c.raw_opacity = raw_o;
        c.sh.assign(sh_coeff_count(m.sh_degree), Vec3::Zero());
        c.sh[0] = rgb_to_sh_dc(scene.points[i].color);
    }
    return m;
}

}  // namespace tsplat
