#pragma once

// Random categorical GRPO configurations and a central-difference gradient
// check, shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "groundcot/grpo.hpp"

namespace groundcot::testing {

struct GradientCase {
  grpo::RolloutGroup group;
  grpo::CategoricalSamples samples;
  std::vector<double> logits;
  grpo::GrpoConfig config;
};

inline GradientCase random_gradient_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> categories(2, 6);
  std::uniform_int_distribution<int> group_size(2, 8);
  std::uniform_int_distribution<int> tokens(1, 5);
  std::uniform_int_distribution<int> reward(0, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  GradientCase c;
  const int k = categories(rng);
  const int g = group_size(rng);
  c.config.group_size = g;
  c.config.kl_coefficient = coin(rng) ? 0.0 : std::uniform_real_distribution<double>(0.01, 2.0)(rng);
  c.config.ratio_aggregation = coin(rng) ? grpo::RatioAggregation::TokenMean : grpo::RatioAggregation::Sequence;
  c.config.advantage_mode = coin(rng) ? grpo::AdvantageMode::Normalized : grpo::AdvantageMode::RawReward;

  std::vector<double> old_logits(k);
  std::vector<double> ref_logits(k);
  c.logits.resize(k);
  for (int j = 0; j < k; ++j) {
    old_logits[j] = normal(rng);
    ref_logits[j] = normal(rng);
    c.logits[j] = old_logits[j] + 0.3 * normal(rng);
  }
  std::uniform_int_distribution<int> action(0, k - 1);
  for (int i = 0; i < g; ++i) {
    std::vector<int> row(tokens(rng));
    for (auto& a : row) a = action(rng);
    c.samples.actions.push_back(std::move(row));
    c.group.rewards.push_back(reward(rng));
  }
  // Keep the group non-degenerate so the gradient is not identically zero.
  if (std::all_of(c.group.rewards.begin(), c.group.rewards.end(),
                  [&](double r) { return r == c.group.rewards[0]; })) {
    c.group.rewards[0] = c.group.rewards[0] == 0 ? 2 : 0;
  }
  c.group.logp_old = grpo::categorical_logp(old_logits, c.samples);
  c.group.logp_ref = grpo::categorical_logp(ref_logits, c.samples);
  c.group.logp_current = grpo::categorical_logp(c.logits, c.samples);
  grpo::assign_advantages(c.group, c.config);
  return c;
}

inline double objective_at(const GradientCase& c, const std::vector<double>& logits) {
  auto group = c.group;
  group.logp_current = grpo::categorical_logp(logits, c.samples);
  return grpo::grpo_objective(group, c.config);
}

/// ||analytic - central difference|| / (||analytic|| + 1e-12).
inline double gradient_relative_error(const GradientCase& c, double h = 1e-5) {
  const auto analytic = grpo::grpo_gradient(c.group, c.samples, c.logits, c.config);
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t j = 0; j < c.logits.size(); ++j) {
    auto plus = c.logits;
    auto minus = c.logits;
    plus[j] += h;
    minus[j] -= h;
    const double fd = (objective_at(c, plus) - objective_at(c, minus)) / (2 * h);
    diff += (analytic[j] - fd) * (analytic[j] - fd);
    norm += analytic[j] * analytic[j];
  }
  return std::sqrt(diff) / (std::sqrt(norm) + 1e-12);
}

}  // namespace groundcot::testing
