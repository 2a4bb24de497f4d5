#include "groundcot/simulator.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

namespace groundcot::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

GroundedTrace toy_trace(const std::string& answer, int variant) {
  const double x = 40.0 + 25.0 * variant;
  return GroundedTrace{
      {ReasoningStep{PointAnnotation{"the highlighted bar", {{x, 120.5}}}, "Read its height."},
       ReasoningStep{PointAnnotation{"the axis labels", {{12.0, 300.0}, {12.0, 20.0}}},
                     "Compare against the scale."},
       ReasoningStep{std::nullopt, "Combine the readings."}},
      answer};
}

}  // namespace

ToyTask standard_toy_task() {
  struct Spec {
    const char* gold;
    const char* wrong;
  };
  const Spec specs[] = {{"14.5", "20"},  {"7", "3"},      {"Yes", "No"},   {"1200", "900"},
                        {"0.35", "0.5"}, {"blue", "red"}, {"42", "24"},    {"March", "June"}};
  ToyTask task;
  int i = 0;
  for (const auto& s : specs) {
    ToyPrompt p;
    p.id = fmt::format("toy-{}", ++i);
    p.gold_answer = s.gold;
    p.pool = {
        serialize(toy_trace(s.gold, i), kCanonicalProfile),
        serialize(toy_trace(s.wrong, i), kCanonicalProfile),
        fmt::format("The chart shows it clearly. <answer>{}</answer>", s.gold),
        "I cannot tell from the image.",
    };
    task.prompts.push_back(std::move(p));
  }
  return task;
}

ScoredTask score_task(ToyTask task, const FormatProfile& profile, const MatchPolicy& policy) {
  ScoredTask scored;
  for (const auto& prompt : task.prompts) {
    if (prompt.pool.empty()) throw SimError(fmt::format("prompt '{}' has an empty pool", prompt.id));
    std::vector<RewardBreakdown> rewards;
    bool has_best = false;
    bool has_worst = false;
    for (const auto& raw : prompt.pool) {
      rewards.push_back(score(raw, prompt.gold_answer, profile, policy));
      has_best |= rewards.back().total == 2.0;
      has_worst |= rewards.back().total == 0.0;
    }
    if (!has_best || !has_worst) {
      throw SimError(fmt::format(
          "prompt '{}' pool needs a candidate with total reward 2 and one with 0", prompt.id));
    }
    scored.rewards.push_back(std::move(rewards));
  }
  scored.task = std::move(task);
  return scored;
}

ToyTask read_task(std::istream& in) {
  const auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("prompts") ||
      !doc.at("prompts").is_array()) {
    throw SimError("task file must be an object with a \"prompts\" array");
  }
  ToyTask task;
  for (std::size_t i = 0; i < doc.at("prompts").size(); ++i) {
    const auto& p = doc.at("prompts")[i];
    const auto bad = [&](const char* what) {
      return SimError(fmt::format("prompts[{}]: {}", i, what));
    };
    if (!p.is_object()) throw bad("not an object");
    for (const auto& [key, _] : p.items()) {
      if (key != "id" && key != "gold_answer" && key != "pool") {
        throw bad(fmt::format("unknown key '{}'", key).c_str());
      }
    }
    if (!p.contains("id") || !p.at("id").is_string()) throw bad("missing string id");
    if (!p.contains("gold_answer") || !p.at("gold_answer").is_string()) {
      throw bad("missing string gold_answer");
    }
    if (!p.contains("pool") || !p.at("pool").is_array()) throw bad("missing pool array");
    ToyPrompt prompt{p.at("id").get<std::string>(), p.at("gold_answer").get<std::string>(), {}};
    for (const auto& c : p.at("pool")) {
      if (!c.is_string()) throw bad("pool entries must be strings");
      prompt.pool.push_back(c.get<std::string>());
    }
    task.prompts.push_back(std::move(prompt));
  }
  if (task.prompts.empty()) throw SimError("task has no prompts");
  return task;
}

std::string task_to_json(const ToyTask& task) {
  nlohmann::ordered_json doc;
  doc["prompts"] = nlohmann::ordered_json::array();
  for (const auto& p : task.prompts) {
    doc["prompts"].push_back({{"id", p.id}, {"gold_answer", p.gold_answer}, {"pool", p.pool}});
  }
  return doc.dump(2);
}

ToyPolicy ToyPolicy::uniform(const ToyTask& task) {
  ToyPolicy policy;
  for (const auto& p : task.prompts) policy.logits.emplace_back(p.pool.size(), 0.0);
  policy.old_logits = policy.logits;
  policy.ref_logits = policy.logits;
  return policy;
}

std::vector<double> ToyPolicy::probabilities(std::size_t prompt) const {
  auto lp = grpo::log_softmax(logits.at(prompt));
  for (auto& v : lp) v = std::exp(v);
  return lp;
}

std::vector<Rollout> rollout(const ToyPolicy& policy, const ScoredTask& task,
                             const grpo::GrpoConfig& config, std::uint64_t seed,
                             RewardSignal signal) {
  config.validate();
  const auto n_prompts = task.task.prompts.size();
  if (policy.logits.size() != n_prompts) {
    throw SimError(fmt::format("policy covers {} prompts, task has {}", policy.logits.size(), n_prompts));
  }
  std::vector<Rollout> out;
  out.reserve(n_prompts);
  for (std::size_t p = 0; p < n_prompts; ++p) {
    const auto& rewards = task.rewards[p];
    if (rewards.empty()) throw SimError(fmt::format("prompt {} has an empty pool", p));
    if (policy.logits[p].size() != rewards.size()) {
      throw SimError(fmt::format("prompt {}: {} logits for {} candidates", p,
                                 policy.logits[p].size(), rewards.size()));
    }
    const auto probs = policy.probabilities(p);
    std::mt19937_64 rng(stream_seed(seed, p, 0));
    std::discrete_distribution<int> pick(probs.begin(), probs.end());

    Rollout r;
    for (int i = 0; i < config.group_size; ++i) {
      const int a = pick(rng);
      r.samples.actions.push_back({a});
      const auto& rb = rewards[static_cast<std::size_t>(a)];
      r.group.rewards.push_back(signal == RewardSignal::Dual ? rb.total : rb.accuracy_reward);
    }
    r.group.logp_current = grpo::categorical_logp(policy.logits[p], r.samples);
    r.group.logp_old = grpo::categorical_logp(policy.old_logits[p], r.samples);
    r.group.logp_ref = grpo::categorical_logp(policy.ref_logits[p], r.samples);
    grpo::assign_advantages(r.group, config);
    out.push_back(std::move(r));
  }
  return out;
}

ExpectedMetrics expected_metrics(const ToyPolicy& policy, const ScoredTask& task) {
  ExpectedMetrics m;
  const auto n = task.rewards.size();
  for (std::size_t p = 0; p < n; ++p) {
    const auto probs = policy.probabilities(p);
    for (std::size_t k = 0; k < probs.size(); ++k) {
      m.mean_reward += probs[k] * task.rewards[p][k].total;
      m.format_rate += probs[k] * task.rewards[p][k].format_reward;
      m.accuracy_rate += probs[k] * task.rewards[p][k].accuracy_reward;
    }
  }
  const auto dn = static_cast<double>(n);
  m.mean_reward /= dn;
  m.format_rate /= dn;
  m.accuracy_rate /= dn;
  return m;
}

TrainResult train(const ScoredTask& task, const TrainOptions& options) {
  return train(task, options, ToyPolicy::uniform(task.task));
}

TrainResult train(const ScoredTask& task, const TrainOptions& options, ToyPolicy initial) {
  if (options.steps < 1) throw SimError(fmt::format("steps must be >= 1, got {}", options.steps));
  options.grpo.validate();

  TrainResult result{{}, std::move(initial)};
  auto& policy = result.policy;
  policy.ref_logits = policy.logits;
  const auto n_prompts = static_cast<double>(task.rewards.size());

  for (int step = 0; step <= options.steps; ++step) {
    policy.old_logits = policy.logits;
    const auto groups = rollout(policy, task, options.grpo,
                                stream_seed(options.seed, static_cast<std::uint64_t>(step), 1),
                                options.signal);

    double objective = 0.0;
    for (const auto& g : groups) objective += grpo::grpo_objective(g.group, options.grpo);
    objective /= n_prompts;

    const auto m = expected_metrics(policy, task);
    result.trace.push_back({step, m.mean_reward, m.format_rate, m.accuracy_rate, objective});
    if (step == options.steps) break;

    for (std::size_t p = 0; p < groups.size(); ++p) {
      const auto grad =
          grpo::grpo_gradient(groups[p].group, groups[p].samples, policy.logits[p], options.grpo);
      for (std::size_t k = 0; k < grad.size(); ++k) {
        const double update = options.learning_rate * grad[k] / n_prompts;
        if (!std::isfinite(grad[k]) || !std::isfinite(update)) {
          throw SimError(fmt::format("non-finite gradient at step {} (prompt {})", step, p));
        }
        policy.logits[p][k] += update;
      }
    }
  }
  return result;
}

void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out) {
  out << "step,mean_reward,format_rate,accuracy_rate,objective\n";
  for (const auto& r : trace) {
    out << fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g}\n", r.step, r.mean_reward, r.format_rate,
                       r.accuracy_rate, r.objective);
  }
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw SimError("total_variation: length mismatch");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

}  // namespace groundcot::sim
