#include "tsplat/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tsplat {

using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "tsplat-checkpoint";
constexpr int kVersion = 1;

const char* to_string(NuGradient m) { return m == NuGradient::kFull ? "full" : "paper"; }
const char* to_string(BurnInNoise m) {
    return m == BurnInNoise::kCovarianceFactor ? "covariance_factor" : "covariance_product";
}
const char* to_string(PositionGradient m) { return m == PositionGradient::kRaw ? "raw" : "adaptive"; }

NuGradient nu_gradient_from(const std::string& s) {
    if (s == "full") return NuGradient::kFull;
    if (s == "paper") return NuGradient::kPaper;
    throw std::runtime_error("unknown nu_gradient '" + s + "'");
}
BurnInNoise burn_in_noise_from(const std::string& s) {
    if (s == "covariance_factor") return BurnInNoise::kCovarianceFactor;
    if (s == "covariance_product") return BurnInNoise::kCovarianceProduct;
    throw std::runtime_error("unknown burn_in_noise '" + s + "'");
}
PositionGradient position_gradient_from(const std::string& s) {
    if (s == "raw") return PositionGradient::kRaw;
    if (s == "adaptive") return PositionGradient::kAdaptive;
    throw std::runtime_error("unknown position_gradient '" + s + "'");
}

ojson config_json(const TrainConfig& c) {
    ojson lr;
    lr["position_eps_init"] = c.lr.position_eps_init;
    lr["position_eps_final"] = c.lr.position_eps_final;
    lr["log_scale"] = c.lr.log_scale;
    lr["rotation"] = c.lr.rotation;
    lr["raw_opacity"] = c.lr.raw_opacity;
    lr["raw_nu"] = c.lr.raw_nu;
    lr["sh_dc"] = c.lr.sh_dc;
    lr["sh_rest"] = c.lr.sh_rest;
    ojson loss;
    loss["dssim"] = c.loss.dssim;
    loss["opacity"] = c.loss.opacity;
    loss["sigma"] = c.loss.sigma;
    loss["per_component_mean"] = c.loss.per_component_mean;
    ojson render;
    render["tile_size"] = c.render.tile_size;
    render["tau"] = c.render.tau;
    render["min_radius_px"] = c.render.min_radius_px;
    render["early_stop"] = c.render.early_stop;
    render["transmittance_floor"] = c.render.transmittance_floor;
    render["active_sh_degree"] = c.render.active_sh_degree;
    // thread count is an execution detail and stays out of the hash

    ojson j;
    j["lr"] = lr;
    j["loss"] = loss;
    j["friction"] = c.friction;
    j["gate_k"] = c.gate_k;
    j["gate_t"] = c.gate_t;
    j["burn_in_fraction"] = c.burn_in_fraction;
    j["noise_is_variance"] = c.noise_is_variance;
    j["enable_noise"] = c.enable_noise;
    j["burn_in_noise"] = to_string(c.burn_in_noise);
    j["position_gradient"] = to_string(c.position_gradient);
    j["nu_gradient"] = to_string(c.nu_gradient);
    j["max_iterations"] = c.max_iterations;
    j["relocation_interval"] = c.relocation_interval;
    j["relocation_cap"] = c.relocation_cap;
    j["dead_threshold"] = c.dead_threshold;
    j["add_fraction"] = c.add_fraction;
    j["max_components"] = c.max_components;
    j["max_sh_degree"] = c.max_sh_degree;
    j["sh_warmup_interval"] = c.sh_warmup_interval;
    j["nu_init"] = c.nu_init;
    j["opacity_init"] = c.opacity_init;
    j["freeze_nu"] = c.freeze_nu;
    j["positive_only"] = c.positive_only;
    j["log_interval"] = c.log_interval;
    j["checkpoint_interval"] = c.checkpoint_interval;
    j["render"] = render;
    j["seed"] = c.seed;
    return j;
}

TrainConfig config_of(const ojson& j) {
    TrainConfig c;
    const auto& lr = j.at("lr");
    c.lr.position_eps_init = lr.at("position_eps_init").get<double>();
    c.lr.position_eps_final = lr.at("position_eps_final").get<double>();
    c.lr.log_scale = lr.at("log_scale").get<double>();
    c.lr.rotation = lr.at("rotation").get<double>();
    c.lr.raw_opacity = lr.at("raw_opacity").get<double>();
    c.lr.raw_nu = lr.at("raw_nu").get<double>();
    c.lr.sh_dc = lr.at("sh_dc").get<double>();
    c.lr.sh_rest = lr.at("sh_rest").get<double>();
    const auto& loss = j.at("loss");
    c.loss.dssim = loss.at("dssim").get<double>();
    c.loss.opacity = loss.at("opacity").get<double>();
    c.loss.sigma = loss.at("sigma").get<double>();
    c.loss.per_component_mean = loss.at("per_component_mean").get<bool>();
    c.friction = j.at("friction").get<double>();
    c.gate_k = j.at("gate_k").get<double>();
    c.gate_t = j.at("gate_t").get<double>();
    c.burn_in_fraction = j.at("burn_in_fraction").get<double>();
    c.noise_is_variance = j.at("noise_is_variance").get<bool>();
    c.enable_noise = j.at("enable_noise").get<bool>();
    c.burn_in_noise = burn_in_noise_from(j.at("burn_in_noise").get<std::string>());
    c.position_gradient = position_gradient_from(j.at("position_gradient").get<std::string>());
    c.nu_gradient = nu_gradient_from(j.at("nu_gradient").get<std::string>());
    c.max_iterations = j.at("max_iterations").get<int>();
    c.relocation_interval = j.at("relocation_interval").get<int>();
    c.relocation_cap = j.at("relocation_cap").get<double>();
    c.dead_threshold = j.at("dead_threshold").get<double>();
    c.add_fraction = j.at("add_fraction").get<double>();
    c.max_components = j.at("max_components").get<int>();
    c.max_sh_degree = j.at("max_sh_degree").get<int>();
    c.sh_warmup_interval = j.at("sh_warmup_interval").get<int>();
    c.nu_init = j.at("nu_init").get<double>();
    c.opacity_init = j.at("opacity_init").get<double>();
    c.freeze_nu = j.at("freeze_nu").get<bool>();
    c.positive_only = j.at("positive_only").get<bool>();
    c.log_interval = j.at("log_interval").get<int>();
    c.checkpoint_interval = j.at("checkpoint_interval").get<int>();
    const auto& r = j.at("render");
    c.render.tile_size = r.at("tile_size").get<int>();
    c.render.tau = r.at("tau").get<double>();
    c.render.min_radius_px = r.at("min_radius_px").get<double>();
    c.render.early_stop = r.at("early_stop").get<bool>();
    c.render.transmittance_floor = r.at("transmittance_floor").get<double>();
    c.render.active_sh_degree = r.at("active_sh_degree").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

template <int N>
void push(ojson& arr, const Eigen::Matrix<double, N, 1>& v) {
    for (int i = 0; i < N; ++i) arr.push_back(v[i]);
}

template <int N>
Eigen::Matrix<double, N, 1> take(const ojson& arr, std::size_t& pos) {
    if (pos + N > arr.size()) throw std::runtime_error("checkpoint: parameter array too short");
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v[i] = arr[pos++].get<double>();
    return v;
}

// Parameters (or their per-component moments) in declared order, one flat array per group.
struct GroupArrays {
    ojson position = ojson::array(), log_scale = ojson::array(), rotation = ojson::array(),
          raw_nu = ojson::array(), raw_opacity = ojson::array(), sh = ojson::array();

    ojson to_json() const {
        ojson j;
        j["position"] = position;
        j["log_scale"] = log_scale;
        j["rotation"] = rotation;
        j["raw_nu"] = raw_nu;
        j["raw_opacity"] = raw_opacity;
        j["sh"] = sh;
        return j;
    }
};

ojson grads_json(const std::vector<ComponentGrad>& gs) {
    GroupArrays a;
    for (const auto& g : gs) {
        push<3>(a.position, g.position);
        push<3>(a.log_scale, g.log_scale);
        push<4>(a.rotation, g.rotation);
        a.raw_nu.push_back(g.raw_nu);
        a.raw_opacity.push_back(g.raw_opacity);
        for (const auto& s : g.sh) push<3>(a.sh, s);
    }
    return a.to_json();
}

std::vector<ComponentGrad> grads_of(const ojson& j, std::size_t n, int n_sh) {
    std::vector<ComponentGrad> out(n);
    std::size_t p = 0, l = 0, r = 0, s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto& g = out[i];
        g.position = take<3>(j.at("position"), p);
        g.log_scale = take<3>(j.at("log_scale"), l);
        g.rotation = take<4>(j.at("rotation"), r);
        g.raw_nu = j.at("raw_nu").at(i).get<double>();
        g.raw_opacity = j.at("raw_opacity").at(i).get<double>();
        g.sh.resize(n_sh);
        for (auto& c : g.sh) c = take<3>(j.at("sh"), s);
    }
    return out;
}

}  // namespace

std::string config_to_json(const TrainConfig& config) { return config_json(config).dump(); }

TrainConfig config_from_json(const std::string& text) {
    try {
        return config_of(ojson::parse(text));
    } catch (const ojson::exception& e) {
        throw std::runtime_error(std::string("config: ") + e.what());
    }
}

std::string Checkpoint::config_hash() const { return fnv1a_hex(config_to_json(config)); }

std::string serialize_checkpoint(const Checkpoint& ck) {
    const Mixture& m = ck.mixture;
    validate_mixture(m);
    GroupArrays a;
    for (const auto& c : m.components) {
        push<3>(a.position, c.position);
        push<3>(a.log_scale, c.log_scale);
        push<4>(a.rotation, c.rotation);
        a.raw_nu.push_back(c.raw_nu);
        a.raw_opacity.push_back(c.raw_opacity);
        for (const auto& s : c.sh) push<3>(a.sh, s);
    }
    ojson mix;
    mix["count"] = m.size();
    mix["sh_degree"] = m.sh_degree;
    mix["background"] = ojson::array({m.background[0], m.background[1], m.background[2]});
    mix["params"] = a.to_json();

    const SamplerState& st = ck.state;
    if (st.momentum.size() != m.size() || st.adam_m.size() != m.size() || st.adam_v.size() != m.size()) {
        throw std::invalid_argument("checkpoint: sampler state does not match the mixture");
    }
    ojson momentum = ojson::array();
    for (const auto& r : st.momentum) push<3>(momentum, r);
    std::ostringstream rng;
    rng << st.rng;
    ojson sampler;
    sampler["iteration"] = st.iteration;
    sampler["adam_steps"] = st.adam_steps;
    sampler["epsilon"] = st.epsilon;
    sampler["friction"] = st.friction;
    sampler["burn_in_until"] = st.burn_in_until;
    sampler["rng"] = rng.str();
    sampler["momentum"] = momentum;
    sampler["adam_m"] = grads_json(st.adam_m);
    sampler["adam_v"] = grads_json(st.adam_v);

    ojson j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["iteration"] = ck.iteration;
    j["extent"] = ck.extent;
    j["config_hash"] = ck.config_hash();
    j["config"] = config_json(ck.config);
    j["mixture"] = mix;
    j["sampler"] = sampler;
    return j.dump() + "\n";
}

Checkpoint deserialize_checkpoint(const std::string& text) {
    Checkpoint ck;
    try {
        const ojson j = ojson::parse(text);
        if (j.at("format").get<std::string>() != kFormat || j.at("version").get<int>() != kVersion) {
            throw std::runtime_error("checkpoint: unsupported format or version");
        }
        ck.iteration = j.at("iteration").get<std::int64_t>();
        ck.extent = j.at("extent").get<double>();
        ck.config = config_of(j.at("config"));
        if (ck.config_hash() != j.at("config_hash").get<std::string>()) {
            throw std::runtime_error("checkpoint: config hash mismatch");
        }

        const auto& mix = j.at("mixture");
        const auto n = mix.at("count").get<std::size_t>();
        Mixture& m = ck.mixture;
        m.sh_degree = mix.at("sh_degree").get<int>();
        if (m.sh_degree < 0 || m.sh_degree > 3) throw std::runtime_error("checkpoint: bad sh_degree");
        std::size_t bg = 0;
        m.background = take<3>(mix.at("background"), bg);
        const auto params = grads_of(mix.at("params"), n, sh_coeff_count(m.sh_degree));
        m.components.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto& c = m.components[i];
            c.position = params[i].position;
            c.log_scale = params[i].log_scale;
            c.rotation = params[i].rotation;
            c.raw_nu = params[i].raw_nu;
            c.raw_opacity = params[i].raw_opacity;
            c.sh = params[i].sh;
        }

        const auto& s = j.at("sampler");
        SamplerState& st = ck.state;
        st.iteration = s.at("iteration").get<std::int64_t>();
        st.adam_steps = s.at("adam_steps").get<std::int64_t>();
        st.epsilon = s.at("epsilon").get<double>();
        st.friction = s.at("friction").get<double>();
        st.burn_in_until = s.at("burn_in_until").get<std::int64_t>();
        std::istringstream rng(s.at("rng").get<std::string>());
        rng >> st.rng;
        if (rng.fail()) throw std::runtime_error("checkpoint: unreadable rng state");
        std::size_t pos = 0;
        st.momentum.resize(n);
        for (auto& r : st.momentum) r = take<3>(s.at("momentum"), pos);
        st.adam_m = grads_of(s.at("adam_m"), n, sh_coeff_count(m.sh_degree));
        st.adam_v = grads_of(s.at("adam_v"), n, sh_coeff_count(m.sh_degree));
    } catch (const ojson::exception& e) {
        throw std::runtime_error(std::string("checkpoint: ") + e.what());
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    const std::string text = serialize_checkpoint(checkpoint);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    out << text;
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_checkpoint(ss.str());
}

}  // namespace tsplat
