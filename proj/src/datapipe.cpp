#include "groundcot/datapipe.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "groundcot/decimal.hpp"
#include "groundcot/parser.hpp"

namespace groundcot::datapipe {

using nlohmann::json;

bool cross_validate(const DraftTrace& draft, std::span<const GrounderResult> grounded) {
  if (draft.request_count() != grounded.size()) {
    throw PipelineError(fmt::format("cross_validate: {} point requests but {} grounder results",
                                    draft.request_count(), grounded.size()));
  }
  std::size_t k = 0;
  for (const auto& step : draft.steps) {
    if (!step.request) continue;
    if (grounded[k++].points.size() != static_cast<std::size_t>(step.request->declared_count)) {
      return false;
    }
  }
  return true;
}

namespace {

bool points_valid(const std::vector<Point2D>& points) {
  return std::all_of(points.begin(), points.end(), [](const Point2D& p) {
    try {
      validate(p);
      return true;
    } catch (const TraceError&) {
      return false;
    }
  });
}

std::optional<GroundedTrace> assemble(const SourceTriplet& triplet, const DraftTrace& draft,
                                      const std::vector<GrounderResult>& grounded) {
  GroundedTrace trace;
  trace.answer = std::string(trim(triplet.gold_answer));
  std::size_t k = 0;
  for (const auto& step : draft.steps) {
    ReasoningStep out;
    out.text = std::string(trim(step.text));
    if (step.request) {
      out.annotation = PointAnnotation{std::string(trim(step.request->description)),
                                       grounded[k++].points};
    }
    trace.steps.push_back(std::move(out));
  }
  if (!is_valid(trace)) return std::nullopt;
  return trace;
}

}  // namespace

SampleOutcome build_sample(const SourceTriplet& triplet, DraftGenerator& generator,
                           PointGrounder& grounder, int max_retries) {
  if (max_retries < 1) throw PipelineError(fmt::format("max_retries must be >= 1, got {}", max_retries));

  SampleOutcome outcome;
  std::optional<DraftTrace> draft;
  // Only failed generator calls consume budget; the successful one shares the
  // first grounding round's attempt.
  while (!draft && outcome.attempts < max_retries) {
    try {
      draft = generator.generate(triplet);
    } catch (const ClientError&) {
      ++outcome.attempts;
    }
  }
  if (!draft) {
    outcome.discard_reason = "generator unavailable";
    return outcome;
  }
  try {
    validate(*draft);
  } catch (const TraceError& e) {
    outcome.discard_reason = fmt::format("invalid draft: {}", e.what());
    return outcome;
  }

  std::vector<const PointRequest*> requests;
  for (const auto& step : draft->steps) {
    if (step.request) requests.push_back(&*step.request);
  }
  std::vector<GrounderResult> grounded(requests.size());
  std::vector<bool> settled(requests.size(), false);
  int round = 0;
  bool passed = requests.empty();
  if (passed) outcome.attempts = std::max(outcome.attempts, 1);
  while (!passed && outcome.attempts < max_retries) {
    ++outcome.attempts;
    ++round;
    for (std::size_t k = 0; k < requests.size(); ++k) {
      if (settled[k]) continue;
      try {
        auto result = grounder.ground(triplet, *requests[k], k, round);
        if (!points_valid(result.points)) result.points.clear();
        grounded[k] = std::move(result);
      } catch (const ClientError&) {
        grounded[k].points.clear();
      }
      settled[k] =
          grounded[k].points.size() == static_cast<std::size_t>(requests[k]->declared_count);
    }
    passed = cross_validate(*draft, grounded);
  }
  if (!passed) {
    outcome.discard_reason = "point count mismatch after retries";
    return outcome;
  }

  auto trace = assemble(triplet, *draft, grounded);
  if (!trace) {
    outcome.discard_reason = "draft does not form a valid trace";
    return outcome;
  }
  outcome.sample = BuiltSample{triplet, std::move(*trace), outcome.attempts};
  return outcome;
}

PipelineResult run_pipeline(std::span<const SourceTriplet> triplets, DraftGenerator& generator,
                            PointGrounder& grounder, const PipelineOptions& options) {
  std::vector<SampleOutcome> outcomes(triplets.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (auto i = next++; i < triplets.size(); i = next++) {
      outcomes[i] = build_sample(triplets[i], generator, grounder, options.max_retries);
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, options.workers));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, triplets.size()); ++w) pool.emplace_back(work);
  }

  PipelineResult result;
  for (auto& o : outcomes) {
    result.total_attempts += static_cast<std::size_t>(o.attempts);
    if (o.sample) {
      result.samples.push_back(std::move(*o.sample));
    } else {
      ++result.discarded;
    }
  }
  std::stable_sort(result.samples.begin(), result.samples.end(),
                   [](const auto& a, const auto& b) { return a.triplet.id < b.triplet.id; });
  return result;
}

CorpusStats corpus_stats(std::span<const SourcedTrace> samples) {
  if (samples.empty()) throw PipelineError("corpus_stats: empty corpus");
  struct Acc {
    std::size_t n = 0;
    std::size_t turns = 0;
    std::size_t points = 0;
  };
  std::map<std::string, Acc> by_source;
  for (const auto& s : samples) {
    auto& acc = by_source[s.source];
    ++acc.n;
    acc.turns += s.trace.steps.size();
    acc.points += s.trace.total_points();
  }

  CorpusStats stats;
  stats.total = samples.size();
  for (const auto& [source, acc] : by_source) {
    const auto n = static_cast<double>(acc.n);
    stats.rows.push_back({source, acc.n, n / static_cast<double>(stats.total),
                          static_cast<double>(acc.turns) / n, static_cast<double>(acc.points) / n});
  }
  std::stable_sort(stats.rows.begin(), stats.rows.end(),
                   [](const auto& a, const auto& b) { return a.samples > b.samples; });
  return stats;
}

namespace {

std::string fixed(double v, int places) { return Decimal::from_double(v).to_fixed(places); }

}  // namespace

std::string format_stats_table(const CorpusStats& stats) {
  std::size_t width = 6;
  for (const auto& r : stats.rows) width = std::max(width, r.source.size());
  std::string out = fmt::format("{:<{}} | {:>8} | {:>6} | {:>5} | {:>6}\n", "Source", width,
                                "Samples", "Ratio", "Turn", "Points");
  out += std::string(width + 41, '-') + '\n';
  for (const auto& r : stats.rows) {
    out += fmt::format("{:<{}} | {:>8} | {:>6} | {:>5} | {:>6}\n", r.source, width, r.samples,
                       fixed(r.ratio * 100.0, 1) + "%", fixed(r.mean_turns, 2),
                       fixed(r.mean_points, 2));
  }
  out += fmt::format("{:<{}} | {:>8}\n", "Total", width, stats.total);
  return out;
}

std::string stats_to_json(const CorpusStats& stats) {
  nlohmann::ordered_json doc;
  doc["total"] = stats.total;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : stats.rows) {
    doc["rows"].push_back({{"source", r.source},
                           {"samples", r.samples},
                           {"ratio", r.ratio},
                           {"mean_turns", r.mean_turns},
                           {"mean_points", r.mean_points}});
  }
  return doc.dump();
}

namespace {

template <typename F>
void for_each_json_line(std::istream& in, F&& f) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw PipelineError(fmt::format("line {}: not a JSON object", line_no));
    }
    f(doc, line_no);
  }
}

std::string required_string(const json& doc, const char* key, std::size_t line_no) {
  if (!doc.contains(key) || !doc.at(key).is_string()) {
    throw PipelineError(fmt::format("line {}: missing string field '{}'", line_no, key));
  }
  return doc.at(key).get<std::string>();
}

}  // namespace

std::vector<SourceTriplet> read_triplets(std::istream& in) {
  std::vector<SourceTriplet> out;
  std::set<std::string> ids;
  for_each_json_line(in, [&](const json& doc, std::size_t line_no) {
    SourceTriplet t;
    t.id = required_string(doc, "id", line_no);
    t.image_ref = doc.contains("image_ref") ? required_string(doc, "image_ref", line_no) : "";
    t.question = required_string(doc, "question", line_no);
    t.gold_answer = required_string(doc, "gold_answer", line_no);
    t.source = doc.contains("source") ? required_string(doc, "source", line_no) : "unknown";
    if (trim(t.question).empty() || trim(t.gold_answer).empty()) {
      throw PipelineError(fmt::format("line {}: question and gold_answer must be non-empty", line_no));
    }
    if (!ids.insert(t.id).second) {
      throw PipelineError(fmt::format("line {}: duplicate id '{}'", line_no, t.id));
    }
    out.push_back(std::move(t));
  });
  return out;
}

std::string sample_to_json_line(const BuiltSample& sample) {
  nlohmann::ordered_json doc;
  doc["id"] = sample.triplet.id;
  doc["source"] = sample.triplet.source;
  doc["question"] = sample.triplet.question;
  doc["gold_answer"] = sample.triplet.gold_answer;
  doc["trace"] = serialize(sample.trace, kCanonicalProfile);
  doc["attempts"] = sample.attempts;
  return doc.dump();
}

std::vector<SourcedTrace> read_corpus(std::istream& in) {
  std::vector<SourcedTrace> out;
  for_each_json_line(in, [&](const json& doc, std::size_t line_no) {
    auto outcome = parse(required_string(doc, "trace", line_no), kCanonicalProfile);
    if (!outcome.trace) {
      const auto& d = outcome.diagnostics;
      throw PipelineError(fmt::format("line {}: invalid trace: {}", line_no,
                                      d.empty() ? "unknown error" : d.front().message));
    }
    out.push_back({std::move(*outcome.trace), required_string(doc, "source", line_no)});
  });
  return out;
}

std::uint64_t call_seed(std::uint64_t seed, std::string_view id, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = 14695981039346656037ULL;
  const auto mix = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  mix(&seed, sizeof seed);
  mix(id.data(), id.size());
  mix(&a, sizeof a);
  mix(&b, sizeof b);
  return h;
}

MockDraftGenerator::MockDraftGenerator(MockGeneratorOptions options) : options_(options) {
  if (options_.min_steps < 1 || options_.max_steps < options_.min_steps) {
    throw PipelineError("mock generator: need 1 <= min_steps <= max_steps");
  }
  if (options_.max_declared_count < 1) throw PipelineError("mock generator: max_declared_count < 1");
}

DraftTrace MockDraftGenerator::generate(const SourceTriplet& triplet) {
  std::mt19937_64 rng(call_seed(options_.seed, triplet.id, 0, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < options_.failure_probability) {
    throw ClientError(fmt::format("mock generator: simulated outage for '{}'", triplet.id));
  }
  std::uniform_int_distribution<int> steps(options_.min_steps, options_.max_steps);
  std::uniform_int_distribution<int> count(1, options_.max_declared_count);
  DraftTrace draft;
  const int n = steps(rng);
  for (int i = 0; i < n; ++i) {
    DraftStep step;
    if (unit(rng) < options_.request_probability) {
      const int c = count(rng);
      step.request = PointRequest{fmt::format("element {} of step {}", c, i + 1), c};
      step.text = fmt::format("Read the {} marked value{}.", c, c == 1 ? "" : "s");
    } else {
      step.text = fmt::format("Reason about step {}.", i + 1);
    }
    draft.steps.push_back(std::move(step));
  }
  return draft;
}

MockPointGrounder::MockPointGrounder(MockGrounderOptions options) : options_(options) {}

GrounderResult MockPointGrounder::ground(const SourceTriplet& triplet, const PointRequest& request,
                                         std::size_t request_index, int attempt) {
  std::mt19937_64 rng(call_seed(options_.seed, triplet.id, request_index + 1,
                                static_cast<std::uint64_t>(attempt)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < options_.failure_probability) {
    throw ClientError(fmt::format("mock grounder: simulated outage for '{}'", triplet.id));
  }
  const bool correct = unit(rng) < options_.success_probability;
  const int n = correct ? request.declared_count : request.declared_count - 1;
  std::uniform_int_distribution<int> coord(0, 9999);
  GrounderResult result{request.description, {}};
  for (int i = 0; i < n; ++i) {
    result.points.push_back({coord(rng) / 10.0, coord(rng) / 10.0});
  }
  return result;
}

}  // namespace groundcot::datapipe
