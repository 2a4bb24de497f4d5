#include "groundcot/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace groundcot::grpo {

void RolloutGroup::validate() const {
  const auto g = rewards.size();
  if (logp_current.size() != g || logp_old.size() != g || logp_ref.size() != g) {
    throw GrpoError(fmt::format("rollout group: {} rewards but {}/{}/{} log-prob rows", g,
                                logp_current.size(), logp_old.size(), logp_ref.size()));
  }
  for (std::size_t i = 0; i < g; ++i) {
    const auto t = logp_current[i].size();
    if (t == 0) throw GrpoError(fmt::format("rollout group: response {} has no tokens", i));
    if (logp_old[i].size() != t || logp_ref[i].size() != t) {
      throw GrpoError(fmt::format("rollout group: response {} token lengths disagree", i));
    }
  }
  if (advantages && advantages->size() != g) {
    throw GrpoError(fmt::format("rollout group: {} advantages for {} responses", advantages->size(), g));
  }
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw GrpoError(fmt::format("group_size must be >= 2, got {}", group_size));
  if (!(kl_coefficient >= 0.0)) throw GrpoError("kl_coefficient must be >= 0");
  if (!(advantage_epsilon > 0.0)) throw GrpoError("advantage_epsilon must be > 0");
}

std::vector<double> group_advantages(std::span<const double> rewards, double epsilon) {
  if (rewards.size() < 2) {
    throw GrpoError(fmt::format("group_advantages needs at least 2 rewards, got {}", rewards.size()));
  }
  const auto n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (const double r : rewards) var += (r - mean) * (r - mean);
  const double denom = std::sqrt(var / n) + epsilon;

  std::vector<double> adv(rewards.size());
  std::transform(rewards.begin(), rewards.end(), adv.begin(),
                 [&](double r) { return (r - mean) / denom; });
  return adv;
}

void assign_advantages(RolloutGroup& group, const GrpoConfig& config) {
  if (config.advantage_mode == AdvantageMode::RawReward) {
    group.advantages = group.rewards;
  } else {
    group.advantages = group_advantages(group.rewards, config.advantage_epsilon);
  }
}

double kl_estimate(std::span<const double> logp_current, std::span<const double> logp_ref) {
  if (logp_current.size() != logp_ref.size()) {
    throw GrpoError(fmt::format("kl_estimate: {} current vs {} reference tokens",
                                logp_current.size(), logp_ref.size()));
  }
  if (logp_current.empty()) throw GrpoError("kl_estimate: empty token list");
  double sum = 0.0;
  for (std::size_t t = 0; t < logp_current.size(); ++t) {
    const double d = logp_ref[t] - logp_current[t];
    // expm1(d) - d is the same quantity with less cancellation near 0.
    sum += std::max(0.0, std::expm1(d) - d);
  }
  return sum / static_cast<double>(logp_current.size());
}

namespace {

double response_ratio(const TokenLogProbs& cur, const TokenLogProbs& old, RatioAggregation mode) {
  if (mode == RatioAggregation::Sequence) {
    double s = 0.0;
    for (std::size_t t = 0; t < cur.size(); ++t) s += cur[t] - old[t];
    return std::exp(s);
  }
  double s = 0.0;
  for (std::size_t t = 0; t < cur.size(); ++t) s += std::exp(cur[t] - old[t]);
  return s / static_cast<double>(cur.size());
}

const std::vector<double>& require_advantages(const RolloutGroup& group) {
  if (!group.advantages) throw GrpoError("rollout group has no advantages");
  return *group.advantages;
}

}  // namespace

double grpo_objective(const RolloutGroup& group, const GrpoConfig& config) {
  group.validate();
  const auto& adv = require_advantages(group);
  double total = 0.0;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const double ratio = response_ratio(group.logp_current[i], group.logp_old[i],
                                        config.ratio_aggregation);
    total += ratio * adv[i];
    if (config.kl_coefficient > 0.0) {
      total -= config.kl_coefficient * kl_estimate(group.logp_current[i], group.logp_ref[i]);
    }
  }
  return total / static_cast<double>(group.size());
}

std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) throw GrpoError("log_softmax: empty logits");
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (const double l : logits) z += std::exp(l - m);
  const double lse = m + std::log(z);
  std::vector<double> out(logits.size());
  std::transform(logits.begin(), logits.end(), out.begin(), [&](double l) { return l - lse; });
  return out;
}

std::vector<TokenLogProbs> categorical_logp(std::span<const double> logits,
                                            const CategoricalSamples& samples) {
  const auto lp = log_softmax(logits);
  std::vector<TokenLogProbs> out;
  out.reserve(samples.actions.size());
  for (const auto& response : samples.actions) {
    TokenLogProbs row;
    row.reserve(response.size());
    for (const int a : response) {
      if (a < 0 || static_cast<std::size_t>(a) >= lp.size()) {
        throw GrpoError(fmt::format("action {} outside {} categories", a, lp.size()));
      }
      row.push_back(lp[static_cast<std::size_t>(a)]);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<double> grpo_gradient(const RolloutGroup& group, const CategoricalSamples& samples,
                                  std::span<const double> logits, const GrpoConfig& config) {
  group.validate();
  const auto& adv = require_advantages(group);
  if (samples.actions.size() != group.size()) {
    throw GrpoError(fmt::format("grpo_gradient: {} sampled responses for a group of {}",
                                samples.actions.size(), group.size()));
  }
  const auto cur = categorical_logp(logits, samples);
  const auto k = logits.size();
  std::vector<double> prob(k);
  {
    const auto lp = log_softmax(logits);
    std::transform(lp.begin(), lp.end(), prob.begin(), [](double v) { return std::exp(v); });
  }

  // d logp(a) / d logits = onehot(a) - prob. Accumulate per-token weights w_t
  // so the gradient is sum_t w_t * (onehot(a_t) - prob).
  std::vector<double> grad(k, 0.0);
  const auto accumulate_token = [&](int action, double weight) {
    grad[static_cast<std::size_t>(action)] += weight;
    for (std::size_t j = 0; j < k; ++j) grad[j] -= weight * prob[j];
  };

  const double beta = config.kl_coefficient;
  const double g = static_cast<double>(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const auto& actions = samples.actions[i];
    const auto& old = group.logp_old[i];
    const auto& ref = group.logp_ref[i];
    if (actions.size() != old.size()) {
      throw GrpoError(fmt::format("grpo_gradient: response {} has {} actions but {} log-probs", i,
                                  actions.size(), old.size()));
    }
    const double t_count = static_cast<double>(actions.size());

    if (config.ratio_aggregation == RatioAggregation::Sequence) {
      double s = 0.0;
      for (std::size_t t = 0; t < actions.size(); ++t) s += cur[i][t] - old[t];
      const double ratio = std::exp(s);
      for (std::size_t t = 0; t < actions.size(); ++t) {
        accumulate_token(actions[t], ratio * adv[i] / g);
      }
    } else {
      for (std::size_t t = 0; t < actions.size(); ++t) {
        accumulate_token(actions[t], std::exp(cur[i][t] - old[t]) * adv[i] / (t_count * g));
      }
    }

    if (beta > 0.0) {
      // d/dcur [exp(ref - cur) - (ref - cur) - 1] = 1 - exp(ref - cur)
      for (std::size_t t = 0; t < actions.size(); ++t) {
        const double dk = 1.0 - std::exp(ref[t] - cur[i][t]);
        accumulate_token(actions[t], -beta * dk / (t_count * g));
      }
    }
  }
  return grad;
}

double sequence_nll(std::span<const double> logp_target_tokens) {
  if (logp_target_tokens.empty()) throw GrpoError("sequence_nll: empty token list");
  double sum = 0.0;
  for (std::size_t t = 0; t < logp_target_tokens.size(); ++t) {
    const double lp = logp_target_tokens[t];
    if (!(lp <= 0.0)) {
      throw GrpoError(fmt::format("sequence_nll: token {} has log-probability {} > 0", t, lp));
    }
    sum -= lp;
  }
  return sum;
}

}  // namespace groundcot::grpo
