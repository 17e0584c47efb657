#include "tsplat/lifecycle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tsplat {

std::size_t RelocationPlan::relocated_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.dead.size();
    return n;
}

std::vector<std::size_t> find_dead(const Mixture& mixture, double threshold) {
    std::vector<std::size_t> dead;
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        if (std::abs(opacity_of(mixture.components[i].raw_opacity)) < threshold) dead.push_back(i);
    }
    return dead;
}

std::vector<std::size_t> choose_targets(const Mixture& mixture, std::size_t n_draws,
                                        std::mt19937_64& rng,
                                        std::span<const std::size_t> excluded) {
    std::vector<double> weights(mixture.size());
    for (std::size_t i = 0; i < mixture.size(); ++i) {
        weights[i] = std::abs(opacity_of(mixture.components[i].raw_opacity));
    }
    for (const auto i : excluded) {
        if (i < weights.size()) weights[i] = 0.0;
    }
    if (std::none_of(weights.begin(), weights.end(), [](double w) { return w > 0.0; })) {
        throw std::invalid_argument("choose_targets: no live component with non-zero opacity");
    }
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::vector<std::size_t> out(n_draws);
    for (auto& t : out) t = pick(rng);
    return out;
}

double new_opacity(double o_old, int n) {
    if (n < 1) {
        throw std::invalid_argument("new_opacity: N must be >= 1");
    }
    if (n == 1) {
        return o_old;
    }
    return 1.0 - std::pow(1.0 - o_old, 1.0 / n);
}

double beta_fn(double x, double y) {
    return std::exp(std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y));
}

double compute_K(int n, double o_new, double nu_new) {
    if (n < 1) {
        throw std::invalid_argument("compute_K: N must be >= 1");
    }
    double k_sum = 0.0;
    for (int i = 1; i <= n; ++i) {
        for (int k = 0; k <= i - 1; ++k) {
            const double binom =
                std::exp(std::lgamma(i) - std::lgamma(k + 1.0) - std::lgamma(static_cast<double>(i - k)));
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            const double z = beta_fn(0.5, ((k + 1.0) * (nu_new + 3.0) - 1.0) / 2.0);
            k_sum += std::round(binom) * sign * std::pow(o_new, k + 1) * z;
        }
    }
    return k_sum;
}

double covariance_scale(double o_old, double nu_old, double nu_new, int n) {
    if (n == 1 && nu_old == nu_new) {
        return 1.0;
    }
    const double o_new = new_opacity(o_old, n);
    const double ratio = beta_fn(0.5, (nu_old + 2.0) / 2.0) / compute_K(n, o_new, nu_new);
    return o_old * o_old * (nu_old / nu_new) * ratio * ratio;
}

RelocationPlan plan_relocation(const Mixture& mixture, std::span<const std::size_t> dead,
                               double cap, std::mt19937_64& rng) {
    RelocationPlan plan;
    const auto limit = static_cast<std::size_t>(std::floor(cap * static_cast<double>(mixture.size())));
    if (dead.empty() || limit == 0) {
        return plan;
    }
    std::vector<std::size_t> chosen(dead.begin(), dead.end());
    std::stable_sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(opacity_of(mixture.components[a].raw_opacity)) <
               std::abs(opacity_of(mixture.components[b].raw_opacity));
    });
    if (chosen.size() > limit) chosen.resize(limit);

    std::vector<std::size_t> targets;
    try {
        targets = choose_targets(mixture, chosen.size(), rng, dead);
    } catch (const std::invalid_argument&) {
        return plan;  // nothing alive to recycle onto
    }
    for (std::size_t j = 0; j < chosen.size(); ++j) {
        auto it = std::find_if(plan.groups.begin(), plan.groups.end(),
                               [&](const RelocationGroup& g) { return g.target == targets[j]; });
        if (it == plan.groups.end()) {
            plan.groups.push_back({targets[j], {}});
            it = std::prev(plan.groups.end());
        }
        it->dead.push_back(chosen[j]);
    }
    return plan;
}

void relocate(Mixture& mixture, const RelocationPlan& plan, SamplerState& state, double cap) {
    const std::size_t n = mixture.size();
    std::vector<char> seen(n, 0);
    auto claim = [&](std::size_t i) {
        if (i >= n) throw std::invalid_argument("relocate: index " + std::to_string(i) + " out of range");
        if (seen[i]) throw std::invalid_argument("relocate: component " + std::to_string(i) + " in two groups");
        seen[i] = 1;
    };
    for (const auto& g : plan.groups) {
        claim(g.target);
        for (const auto d : g.dead) claim(d);
    }
    if (static_cast<double>(plan.relocated_count()) > cap * static_cast<double>(n) + 1e-9) {
        throw std::invalid_argument("relocate: plan exceeds the relocation cap");
    }
    if (state.momentum.size() != n) {
        throw std::invalid_argument("relocate: sampler state size mismatch");
    }

    for (const auto& g : plan.groups) {
        if (g.dead.empty()) continue;
        const TComponent source = mixture.components[g.target];
        const int group_n = g.group_size();
        const double o_old = opacity_of(source.raw_opacity);
        const double nu = nu_of(source.raw_nu);
        const double o_new = new_opacity(o_old, group_n);
        const double scale = covariance_scale(o_old, nu, nu, group_n);
        TComponent moved = source;
        moved.raw_opacity = std::atanh(o_new);
        moved.log_scale = source.log_scale + Vec3::Constant(0.5 * std::log(scale));

        mixture.components[g.target] = moved;
        state.reset_component(g.target);
        for (const auto d : g.dead) {
            mixture.components[d] = moved;
            state.reset_component(d);
        }
    }
}

std::size_t add_components(Mixture& mixture, double fraction, std::size_t max_components,
                           std::mt19937_64& rng, SamplerState& state, double dead_threshold) {
    const std::size_t count = mixture.size();
    if (count == 0 || fraction <= 0.0) return 0;
    std::size_t n_add = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(count)));
    n_add = std::min(n_add, max_components > count ? max_components - count : std::size_t{0});
    if (n_add == 0) return 0;

    std::uniform_int_distribution<std::size_t> pick(0, count - 1);
    for (std::size_t j = 0; j < n_add; ++j) {
        TComponent fresh = mixture.components[pick(rng)];
        fresh.raw_opacity = 0.0;
        mixture.components.push_back(std::move(fresh));
    }
    state.resize_for(mixture);
    for (std::size_t i = count; i < mixture.size(); ++i) state.reset_component(i);

    std::vector<std::size_t> fresh_idx(n_add);
    std::iota(fresh_idx.begin(), fresh_idx.end(), count);
    const auto dead = find_dead(mixture, dead_threshold);
    std::vector<std::size_t> targets;
    try {
        targets = choose_targets(mixture, n_add, rng, dead);
    } catch (const std::invalid_argument&) {
        return n_add;  // no live component; the additions stay transparent
    }
    RelocationPlan plan;
    for (std::size_t j = 0; j < n_add; ++j) {
        auto it = std::find_if(plan.groups.begin(), plan.groups.end(),
                               [&](const RelocationGroup& g) { return g.target == targets[j]; });
        if (it == plan.groups.end()) {
            plan.groups.push_back({targets[j], {}});
            it = std::prev(plan.groups.end());
        }
        it->dead.push_back(fresh_idx[j]);
    }
    relocate(mixture, plan, state);
    return n_add;
}

}  // namespace tsplat
