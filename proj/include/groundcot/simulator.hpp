#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "groundcot/grpo.hpp"
#include "groundcot/reward.hpp"
#include "groundcot/trace.hpp"

namespace groundcot::sim {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One prompt with a finite pool of candidate raw outputs.
struct ToyPrompt {
  std::string id;
  std::string gold_answer;
  std::vector<std::string> pool;
};

struct ToyTask {
  std::vector<ToyPrompt> prompts;
};

/// Task with every candidate pre-scored by reward::score.
struct ScoredTask {
  ToyTask task;
  std::vector<std::vector<RewardBreakdown>> rewards;  // [prompt][candidate]
};

/// Scores every candidate and checks that each pool holds at least one
/// candidate with total reward 2 and one with total reward 0.
ScoredTask score_task(ToyTask task, const FormatProfile& profile = kCanonicalProfile,
                      const MatchPolicy& policy = {});

/// Eight prompts, each pooling a well-formatted correct response, a
/// well-formatted wrong one, a malformed response whose answer is still
/// extractable and correct, and a malformed unanswerable one.
ToyTask standard_toy_task();

/// {"prompts":[{"id":..., "gold_answer":..., "pool":["raw", ...]}]}
ToyTask read_task(std::istream& in);
std::string task_to_json(const ToyTask& task);

/// Per-prompt logits over the candidate pool plus the sampling-policy and
/// reference-policy snapshots.
struct ToyPolicy {
  std::vector<std::vector<double>> logits;
  std::vector<std::vector<double>> old_logits;
  std::vector<std::vector<double>> ref_logits;

  static ToyPolicy uniform(const ToyTask& task);
  std::vector<double> probabilities(std::size_t prompt) const;
};

/// Which reward the optimizer sees. Reported metrics always use the full breakdown.
enum class RewardSignal { Dual, AccuracyOnly };

struct Rollout {
  grpo::RolloutGroup group;
  grpo::CategoricalSamples samples;
};

/// Samples `group_size` candidates per prompt from the current policy and fills
/// rewards, log-probs under the three policies and advantages. Each prompt uses
/// its own RNG stream derived from `seed`.
std::vector<Rollout> rollout(const ToyPolicy& policy, const ScoredTask& task,
                             const grpo::GrpoConfig& config, std::uint64_t seed,
                             RewardSignal signal = RewardSignal::Dual);

/// Closed-form expectations of the breakdown under the current policy,
/// averaged over prompts.
struct ExpectedMetrics {
  double mean_reward = 0.0;
  double format_rate = 0.0;
  double accuracy_rate = 0.0;
};
ExpectedMetrics expected_metrics(const ToyPolicy& policy, const ScoredTask& task);

struct TraceRow {
  int step = 0;
  double mean_reward = 0.0;
  double format_rate = 0.0;
  double accuracy_rate = 0.0;
  double objective = 0.0;
};

struct TrainOptions {
  grpo::GrpoConfig grpo;
  int steps = 500;
  double learning_rate = 1.0;
  std::uint64_t seed = 0;
  RewardSignal signal = RewardSignal::Dual;
};

struct TrainResult {
  std::vector<TraceRow> trace;  // rows 0..steps; row s is the policy after s updates
  ToyPolicy policy;
};

/// Plain gradient ascent on the mean-over-prompts GRPO objective. The old
/// policy is refreshed every step; the reference stays at the initial policy.
TrainResult train(const ScoredTask& task, const TrainOptions& options);
TrainResult train(const ScoredTask& task, const TrainOptions& options, ToyPolicy initial);

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out);

/// Total-variation distance between two distributions of equal length.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace groundcot::sim
