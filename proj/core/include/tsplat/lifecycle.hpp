#pragma once

#include "tsplat/mixture.hpp"
#include "tsplat/sghmc.hpp"

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace tsplat {

/// One relocation: `dead` components are moved onto `target`, giving N = 1 + dead.size().
struct RelocationGroup {
    std::size_t target = 0;
    std::vector<std::size_t> dead;

    int group_size() const { return 1 + static_cast<int>(dead.size()); }
};

struct RelocationPlan {
    std::vector<RelocationGroup> groups;

    std::size_t relocated_count() const;
};

/// Indices with |o| < threshold.
std::vector<std::size_t> find_dead(const Mixture& mixture, double threshold);

/// `n_draws` multinomial draws with probability proportional to |o| over the components not
/// listed in `excluded`. Throws std::invalid_argument when no candidate has non-zero weight.
std::vector<std::size_t> choose_targets(const Mixture& mixture, std::size_t n_draws,
                                        std::mt19937_64& rng,
                                        std::span<const std::size_t> excluded = {});

/// Solves (1 - o_new)^N = 1 - o_old.
double new_opacity(double o_old, int n);

/// Beta function through log-gamma.
double beta_fn(double x, double y);

/// Coverage sum K used by the covariance correction, evaluated with log-gamma betas.
double compute_K(int n, double o_new, double nu_new);

/// Multiplier applied to the target covariance for a group of size N.
double covariance_scale(double o_old, double nu_old, double nu_new, int n);

/// Caps `dead` at floor(cap * count), draws targets and groups draws by target.
RelocationPlan plan_relocation(const Mixture& mixture, std::span<const std::size_t> dead,
                               double cap, std::mt19937_64& rng);

/// Applies a plan in place. Every member of a group copies the target's position, rotation,
/// nu and colour, takes o_new and the rescaled covariance; its optimizer state is reset.
/// Throws on overlapping groups, out-of-range indices or a plan above `cap`.
void relocate(Mixture& mixture, const RelocationPlan& plan, SamplerState& state, double cap = 1.0);

/// Appends floor(fraction * count) zero-opacity components (truncated at max_components)
/// and recycles them onto live components. Returns the number added.
std::size_t add_components(Mixture& mixture, double fraction, std::size_t max_components,
                           std::mt19937_64& rng, SamplerState& state, double dead_threshold);

}  // namespace tsplat
