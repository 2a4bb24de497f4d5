#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "groundcot/parser.hpp"

namespace groundcot::cli {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CommandError(fmt::format("cannot read input file '{}'", path.string()));
  return in;
}

// Writes to a sibling temporary file and renames it into place on commit();
// an uncommitted file is removed, so failures never leave partial output.
class OutputFile {
 public:
  OutputFile(const std::filesystem::path& path, std::ostream& fallback) : path_(path) {
    if (path_.empty()) {
      stream_ = &fallback;
      return;
    }
    tmp_ = path_;
    tmp_ += ".partial";
    file_.open(tmp_);
    if (!file_) throw CommandError(fmt::format("cannot write output file '{}'", path_.string()));
    stream_ = &file_;
  }
  OutputFile(const OutputFile&) = delete;
  OutputFile& operator=(const OutputFile&) = delete;
  ~OutputFile() {
    if (!tmp_.empty() && !committed_) {
      file_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  std::ostream& stream() { return *stream_; }

  void commit() {
    stream_->flush();
    if (!*stream_) throw CommandError(fmt::format("failed writing '{}'", path_.string()));
    if (tmp_.empty()) return;
    file_.close();
    std::error_code ec;
    std::filesystem::rename(tmp_, path_, ec);
    if (ec) throw CommandError(fmt::format("cannot move output into '{}': {}", path_.string(), ec.message()));
    committed_ = true;
  }

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
  bool committed_ = false;
};

std::string raw_from_line(const std::string& line) {
  const auto doc = nlohmann::json::parse(line, nullptr, false);
  if (!doc.is_discarded() && doc.is_object() && doc.contains("raw_output") &&
      doc.at("raw_output").is_string()) {
    return doc.at("raw_output").get<std::string>();
  }
  return line;
}

template <typename Error, typename F>
auto rethrow_as_command_error(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw CommandError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace

int cmd_validate(const CommonOptions& common, const IoOptions& io, std::ostream& out) {
  auto in = open_input(io.input);
  std::string line;
  std::size_t line_no = 0;
  bool all_valid = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto outcome = parse(raw_from_line(line), common.profile);
    if (outcome.fully_valid()) {
      out << fmt::format("line {}: OK\n", line_no);
      continue;
    }
    all_valid = false;
    out << fmt::format("line {}: FAIL think_intact={} answer_extractable={}", line_no,
                       outcome.think_intact, outcome.answer_extractable);
    for (const auto& d : outcome.diagnostics) out << fmt::format("; at {}: {}", d.position, d.message);
    out << '\n';
  }
  return all_valid ? 0 : 1;
}

int cmd_score(const CommonOptions& common, const IoOptions& io, std::ostream& out) {
  auto in = open_input(io.input);
  const auto records = rethrow_as_command_error<eval::EvalError>(io.input, [&] { return eval::read_records(in); });
  OutputFile file(io.output, out);
  for (const auto& rec : records) {
    const auto r = score(rec.raw_output, rec.gold_answer, common.profile, common.policy);
    nlohmann::ordered_json doc;
    doc["id"] = rec.id;
    doc["format_reward"] = r.format_reward;
    doc["accuracy_reward"] = r.accuracy_reward;
    doc["total"] = r.total;
    file.stream() << doc.dump() << '\n';
  }
  file.commit();
  return 0;
}

int cmd_eval(const CommonOptions& common, const IoOptions& io, eval::EvalMode mode, std::ostream& out) {
  auto in = open_input(io.input);
  const auto report = rethrow_as_command_error<eval::EvalError>(io.input, [&] {
    const auto records = eval::read_records(in);
    return eval::evaluate(records, common.profile, common.policy, mode);
  });
  OutputFile file(io.output, out);
  eval::emit_report(report, file.stream());
  file.commit();
  return 0;
}

int cmd_stats(const IoOptions& io, std::ostream& out) {
  auto in = open_input(io.input);
  const auto stats = rethrow_as_command_error<datapipe::PipelineError>(io.input, [&] {
    const auto corpus = datapipe::read_corpus(in);
    return datapipe::corpus_stats(corpus);
  });
  OutputFile file(io.output, out);
  file.stream() << datapipe::format_stats_table(stats) << datapipe::stats_to_json(stats) << '\n';
  file.commit();
  return 0;
}

int cmd_datagen(const CommonOptions& common, DatagenOptions options, std::ostream& log) {
  if (options.io.output.empty()) throw CommandError("datagen requires --output");
  auto in = open_input(options.io.input);
  const auto triplets = rethrow_as_command_error<datapipe::PipelineError>(
      options.io.input, [&] { return datapipe::read_triplets(in); });

  std::unique_ptr<datapipe::DraftGenerator> generator;
  std::unique_ptr<datapipe::PointGrounder> grounder;
  if (!options.generator_url.empty() || !options.grounder_url.empty()) {
    if (options.generator_url.empty() || options.grounder_url.empty()) {
      throw CommandError("--generator-url and --grounder-url must be given together");
    }
    const auto split = [&](const std::string& url) {
      // scheme://host[:port]/path
      const auto scheme_end = url.find("://");
      const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
      if (path_start == std::string::npos) return datapipe::HttpClientConfig{url, "/", options.token_env};
      return datapipe::HttpClientConfig{url.substr(0, path_start), url.substr(path_start), options.token_env};
    };
    generator = std::make_unique<datapipe::HttpDraftGenerator>(split(options.generator_url));
    grounder = std::make_unique<datapipe::HttpPointGrounder>(split(options.grounder_url));
  } else {
    options.generator.seed = common.seed;
    options.grounder.seed = common.seed;
    generator = std::make_unique<datapipe::MockDraftGenerator>(options.generator);
    grounder = std::make_unique<datapipe::MockPointGrounder>(options.grounder);
  }

  const auto result = datapipe::run_pipeline(triplets, *generator, *grounder,
                                             {options.max_retries, options.workers});
  OutputFile file(options.io.output, log);
  for (const auto& s : result.samples) file.stream() << datapipe::sample_to_json_line(s) << '\n';
  file.commit();
  log << fmt::format("datagen: {} triplets, {} accepted, {} discarded, {} attempts\n",
                     triplets.size(), result.samples.size(), result.discarded,
                     result.total_attempts);
  return 0;
}

int cmd_simulate(const CommonOptions& common, SimulateOptions options, std::ostream& out) {
  sim::ToyTask task;
  if (options.task.empty()) {
    task = sim::standard_toy_task();
  } else {
    auto in = open_input(options.task);
    task = rethrow_as_command_error<sim::SimError>(options.task, [&] { return sim::read_task(in); });
  }
  options.train.seed = common.seed;
  const auto result = rethrow_as_command_error<sim::SimError>(options.task, [&] {
    const auto scored = sim::score_task(std::move(task), common.profile, common.policy);
    return sim::train(scored, options.train);
  });
  OutputFile file(options.output, out);
  sim::write_trace_csv(result.trace, file.stream());
  file.commit();
  return 0;
}

}  // namespace groundcot::cli
