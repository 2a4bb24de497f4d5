#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace groundcot::grpo {

class GrpoError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using TokenLogProbs = std::vector<double>;

/// One prompt's G sampled responses.
///
/// Token-level log-probabilities are stored per response under the current
/// policy, the sampling (old) policy and the frozen reference policy.
struct RolloutGroup {
  std::vector<double> rewards;
  std::vector<TokenLogProbs> logp_current;
  std::vector<TokenLogProbs> logp_old;
  std::vector<TokenLogProbs> logp_ref;
  std::optional<std::vector<double>> advantages;

  std::size_t size() const { return rewards.size(); }
  /// Throws GrpoError if lengths disagree.
  void validate() const;
};

/// Weight applied to each response's importance ratio.
enum class AdvantageMode {
  Normalized,  // (r - mean) / (std + eps)
  RawReward,   // the combined reward itself
};

/// How per-token ratios are combined within a response.
enum class RatioAggregation {
  TokenMean,  // mean_t exp(cur_t - old_t)
  Sequence,   // exp(sum_t (cur_t - old_t))
};

struct GrpoConfig {
  int group_size = 8;
  double kl_coefficient = 0.0;
  double advantage_epsilon = 1e-8;
  AdvantageMode advantage_mode = AdvantageMode::Normalized;
  RatioAggregation ratio_aggregation = RatioAggregation::TokenMean;

  void validate() const;
};

/// a_i = (r_i - mean(r)) / (std_pop(r) + epsilon). Requires at least two rewards.
std::vector<double> group_advantages(std::span<const double> rewards, double epsilon);

/// Fills `group.advantages` according to the configured advantage mode.
void assign_advantages(RolloutGroup& group, const GrpoConfig& config);

/// Mean over tokens of exp(ref - cur) - (ref - cur) - 1. Always >= 0.
double kl_estimate(std::span<const double> logp_current, std::span<const double> logp_ref);

/// Unclipped GRPO surrogate:
///   mean_i [ ratio_i * a_i - beta * kl_i ]
/// with ratio_i aggregated per `config.ratio_aggregation` and kl_i the
/// per-response token-mean KL estimate against the reference policy.
double grpo_objective(const RolloutGroup& group, const GrpoConfig& config);

/// Categorical policy over a finite action set; every token of every response
/// is one draw from softmax(logits).
struct CategoricalSamples {
  std::vector<std::vector<int>> actions;  // [response][token]
};

std::vector<double> log_softmax(std::span<const double> logits);

/// Current-policy token log-probs of `samples` under softmax(logits).
std::vector<TokenLogProbs> categorical_logp(std::span<const double> logits,
                                            const CategoricalSamples& samples);

/// Exact gradient of grpo_objective with respect to `logits`, holding the old
/// and reference log-probs and the advantages fixed. logp_current is
/// recomputed from `logits`.
std::vector<double> grpo_gradient(const RolloutGroup& group, const CategoricalSamples& samples,
                                  std::span<const double> logits, const GrpoConfig& config);

/// Supervised sequence loss -sum_t log p(y_t). Entries must be <= 0.
double sequence_nll(std::span<const double> logp_target_tokens);

}  // namespace groundcot::grpo
