#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "groundcot/trace.hpp"

namespace groundcot::datapipe {

struct SourceTriplet {
  std::string id;
  std::string image_ref;
  std::string question;
  std::string gold_answer;
  std::string source;

  bool operator==(const SourceTriplet&) const = default;
};

/// Grounder output for one point request. An empty point list is a grounding failure.
struct GrounderResult {
  std::string description;
  std::vector<Point2D> points;
};

/// Retriable transport failure from a generator or grounder client.
class ClientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Schema or alignment violation in pipeline inputs.
class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Produces a text-only draft rationale whose steps may request points.
class DraftGenerator {
 public:
  virtual ~DraftGenerator() = default;
  virtual DraftTrace generate(const SourceTriplet& triplet) = 0;
};

/// Produces coordinates for one point request. `attempt` counts from 1.
class PointGrounder {
 public:
  virtual ~PointGrounder() = default;
  virtual GrounderResult ground(const SourceTriplet& triplet, const PointRequest& request,
                                std::size_t request_index, int attempt) = 0;
};

/// True iff every request's declared count equals the number of points grounded
/// for it. `grounded` is positionally aligned with the draft's point requests.
bool cross_validate(const DraftTrace& draft, std::span<const GrounderResult> grounded);

struct BuiltSample {
  SourceTriplet triplet;
  GroundedTrace trace;
  int attempts = 0;
};

/// Outcome of building one sample. `attempts` is the retry budget consumed.
struct SampleOutcome {
  std::optional<BuiltSample> sample;
  int attempts = 0;
  std::string discard_reason;  // empty when accepted
};

inline constexpr int kDefaultMaxRetries = 8;

/// Draft once, then ground every point request, re-grounding only the requests
/// whose counts disagree, until cross-validation passes or `max_retries` rounds
/// are spent. Transport failures consume the same budget.
SampleOutcome build_sample(const SourceTriplet& triplet, DraftGenerator& generator,
                           PointGrounder& grounder, int max_retries = kDefaultMaxRetries);

struct PipelineOptions {
  int max_retries = kDefaultMaxRetries;
  int workers = 1;
};

struct PipelineResult {
  std::vector<BuiltSample> samples;  // sorted by id
  std::size_t discarded = 0;
  std::size_t total_attempts = 0;
};

/// Builds samples for all triplets with up to `workers` threads. Clients must be
/// safe to call concurrently when workers > 1.
PipelineResult run_pipeline(std::span<const SourceTriplet> triplets, DraftGenerator& generator,
                            PointGrounder& grounder, const PipelineOptions& options = {});

struct SourcedTrace {
  GroundedTrace trace;
  std::string source;
};

struct CorpusRow {
  std::string source;
  std::size_t samples = 0;
  double ratio = 0.0;
  double mean_turns = 0.0;
  double mean_points = 0.0;
};

struct CorpusStats {
  std::size_t total = 0;
  std::vector<CorpusRow> rows;  // by descending sample count, then source name
};

CorpusStats corpus_stats(std::span<const SourcedTrace> samples);

/// Aligned table with ratio as a one-decimal percentage and means to two decimals.
std::string format_stats_table(const CorpusStats& stats);
std::string stats_to_json(const CorpusStats& stats);

// JSON-lines I/O. Readers throw PipelineError naming the 1-based line number.
std::vector<SourceTriplet> read_triplets(std::istream& in);
std::string sample_to_json_line(const BuiltSample& sample);
std::vector<SourcedTrace> read_corpus(std::istream& in);

/// Deterministic stand-ins for the generator and grounder models.
struct MockGeneratorOptions {
  std::uint64_t seed = 0;
  int min_steps = 2;
  int max_steps = 5;
  double request_probability = 0.6;
  int max_declared_count = 4;
  double failure_probability = 0.0;
};

class MockDraftGenerator final : public DraftGenerator {
 public:
  explicit MockDraftGenerator(MockGeneratorOptions options);
  DraftTrace generate(const SourceTriplet& triplet) override;

 private:
  MockGeneratorOptions options_;
};

struct MockGrounderOptions {
  std::uint64_t seed = 0;
  double success_probability = 1.0;
  double failure_probability = 0.0;  // transport failures
};

/// Returns the declared number of points with `success_probability`, otherwise
/// one fewer. Each call's outcome depends only on (seed, id, request, attempt).
class MockPointGrounder final : public PointGrounder {
 public:
  explicit MockPointGrounder(MockGrounderOptions options);
  GrounderResult ground(const SourceTriplet& triplet, const PointRequest& request,
                        std::size_t request_index, int attempt) override;

 private:
  MockGrounderOptions options_;
};

/// Per-call seed for mocks: FNV-1a over the seed and the call's identity.
std::uint64_t call_seed(std::uint64_t seed, std::string_view id, std::uint64_t a, std::uint64_t b);

/// HTTP/JSON client configuration. The bearer token is read from the
/// environment variable named by `token_env` at call time, if set.
struct HttpClientConfig {
  std::string base_url;  // e.g. "http://localhost:8080"
  std::string path;      // e.g. "/generate"
  std::string token_env;
  int timeout_seconds = 60;
};

/// POST {id, image_ref, question, gold_answer}
///   -> {"steps":[{"text":..., "point":{"description":..., "count":n}}]}
class HttpDraftGenerator final : public DraftGenerator {
 public:
  explicit HttpDraftGenerator(HttpClientConfig config);
  DraftTrace generate(const SourceTriplet& triplet) override;

 private:
  HttpClientConfig config_;
};

/// POST {id, image_ref, question, description, declared_count, attempt}
///   -> {"description":..., "points":[{"x":..., "y":...}]}
class HttpPointGrounder final : public PointGrounder {
 public:
  explicit HttpPointGrounder(HttpClientConfig config);
  GrounderResult ground(const SourceTriplet& triplet, const PointRequest& request,
                        std::size_t request_index, int attempt) override;

 private:
  HttpClientConfig config_;
};

}  // namespace groundcot::datapipe
