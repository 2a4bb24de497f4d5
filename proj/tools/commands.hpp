#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "groundcot/datapipe.hpp"
#include "groundcot/eval.hpp"
#include "groundcot/reward.hpp"
#include "groundcot/simulator.hpp"
#include "groundcot/trace.hpp"

namespace groundcot::cli {

struct CommonOptions {
  FormatProfile profile;
  MatchPolicy policy;
  std::uint64_t seed = 0;
};

struct IoOptions {
  std::filesystem::path input;
  std::filesystem::path output;  // empty -> standard output
};

struct DatagenOptions {
  IoOptions io;
  int max_retries = datapipe::kDefaultMaxRetries;
  int workers = 1;
  datapipe::MockGeneratorOptions generator;
  datapipe::MockGrounderOptions grounder;
  std::string generator_url;  // non-empty -> HTTP clients instead of mocks
  std::string grounder_url;
  std::string token_env;
};

struct SimulateOptions {
  std::filesystem::path task;  // empty -> built-in standard task
  std::filesystem::path output;
  sim::TrainOptions train;
};

/// Thrown for user-facing failures; main() prints the message and exits 2.
class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Each returns the process exit status.
int cmd_validate(const CommonOptions& common, const IoOptions& io, std::ostream& out);
int cmd_score(const CommonOptions& common, const IoOptions& io, std::ostream& out);
int cmd_eval(const CommonOptions& common, const IoOptions& io, eval::EvalMode mode, std::ostream& out);
int cmd_stats(const IoOptions& io, std::ostream& out);
int cmd_datagen(const CommonOptions& common, DatagenOptions options, std::ostream& log);
int cmd_simulate(const CommonOptions& common, SimulateOptions options, std::ostream& out);

}  // namespace groundcot::cli
