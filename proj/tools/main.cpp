#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "commands.hpp"

using namespace groundcot;

int main(int argc, char** argv) {
  CLI::App app{"groundcot: grounded chain-of-thought rewards, evaluation, data pipeline and GRPO simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with option overrides; unknown keys are rejected");
  app.allow_config_extras(CLI::config_extras_mode::error);

  cli::CommonOptions common;
  std::string syntax = "xml";
  int indexing = 0;
  app.add_option("--format", syntax, "Trace syntax")
      ->check(CLI::IsMember({"xml", "json"}))
      ->capture_default_str();
  app.add_option("--indexing", indexing, "Point attribute index base")
      ->check(CLI::IsMember({0, 1}))
      ->capture_default_str();
  app.add_option("--tolerance", common.policy.numeric_relative_tolerance,
                 "Relative tolerance for numeric answers")
      ->capture_default_str();
  app.add_option("--zero-tolerance", common.policy.zero_gold_absolute_tolerance,
                 "Absolute tolerance when the gold answer is 0")
      ->capture_default_str();
  app.add_option("--seed", common.seed, "Seed for mocks and the simulator")->capture_default_str();

  cli::IoOptions io;
  const auto add_io = [&](CLI::App* sub, bool with_output) {
    sub->add_option("input", io.input, "Input file")->required();
    if (with_output) sub->add_option("-o,--output", io.output, "Output file (default: stdout)");
  };

  auto* validate = app.add_subcommand("validate", "Check raw outputs against the trace grammar");
  add_io(validate, false);

  auto* score = app.add_subcommand("score", "Score {id, raw_output, gold_answer} records");
  add_io(score, true);

  auto* evaluate = app.add_subcommand("eval", "Overall / Inner / Format metrics over records");
  add_io(evaluate, true);
  std::string mode = "strict";
  evaluate->add_option("--mode", mode, "strict or lenient")
      ->check(CLI::IsMember({"strict", "lenient"}))
      ->capture_default_str();

  auto* stats = app.add_subcommand("stats", "Per-source statistics of a built corpus");
  add_io(stats, true);

  auto* datagen = app.add_subcommand("datagen", "Build grounded samples from source triplets");
  cli::DatagenOptions dg;
  datagen->add_option("input", dg.io.input, "Triplet JSONL")->required();
  datagen->add_option("-o,--output", dg.io.output, "Sample JSONL")->required();
  datagen->add_option("--max-retries", dg.max_retries)->capture_default_str()->check(CLI::PositiveNumber);
  datagen->add_option("--workers", dg.workers)->capture_default_str()->check(CLI::PositiveNumber);
  datagen->add_option("--min-steps", dg.generator.min_steps)->capture_default_str();
  datagen->add_option("--max-steps", dg.generator.max_steps)->capture_default_str();
  datagen->add_option("--request-prob", dg.generator.request_probability)->capture_default_str();
  datagen->add_option("--max-count", dg.generator.max_declared_count)->capture_default_str();
  datagen->add_option("--generator-failure-prob", dg.generator.failure_probability)->capture_default_str();
  datagen->add_option("--success-prob", dg.grounder.success_probability, "Mock grounder per-attempt success")
      ->capture_default_str();
  datagen->add_option("--grounder-failure-prob", dg.grounder.failure_probability)->capture_default_str();
  datagen->add_option("--generator-url", dg.generator_url, "HTTP generator endpoint");
  datagen->add_option("--grounder-url", dg.grounder_url, "HTTP grounder endpoint");
  datagen->add_option("--token-env", dg.token_env, "Environment variable holding the bearer token");

  auto* simulate = app.add_subcommand("simulate", "Train the toy GRPO policy and write a CSV trace");
  cli::SimulateOptions so;
  std::string reward = "dual";
  simulate->add_option("--task", so.task, "Task JSON (default: built-in standard task)");
  simulate->add_option("-o,--output", so.output, "CSV output (default: stdout)");
  simulate->add_option("--steps", so.train.steps)->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--lr", so.train.learning_rate)->capture_default_str();
  simulate->add_option("--beta", so.train.grpo.kl_coefficient)->capture_default_str();
  simulate->add_option("--group-size", so.train.grpo.group_size)->capture_default_str();
  simulate->add_option("--epsilon", so.train.grpo.advantage_epsilon)->capture_default_str();
  simulate->add_option("--reward", reward)->check(CLI::IsMember({"dual", "accuracy"}))->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  common.profile.syntax = syntax == "json" ? Syntax::Json : Syntax::Xml;
  common.profile.indexing = indexing == 1 ? Indexing::OneBased : Indexing::ZeroBased;
  so.train.signal = reward == "accuracy" ? sim::RewardSignal::AccuracyOnly : sim::RewardSignal::Dual;

  std::cerr << "# resolved configuration\n"
            << fmt::format("format=\"{}\"\nindexing={}\ntolerance={}\nzero-tolerance={}\nseed={}\n",
                           syntax, indexing, common.policy.numeric_relative_tolerance,
                           common.policy.zero_gold_absolute_tolerance, common.seed);
  for (auto* sub : app.get_subcommands()) {
    std::cerr << "[" << sub->get_name() << "]\n" << sub->config_to_str(true, false);
  }

  try {
    common.policy.validate();
    if (*validate) return cli::cmd_validate(common, io, std::cout);
    if (*score) return cli::cmd_score(common, io, std::cout);
    if (*evaluate) {
      return cli::cmd_eval(common, io, mode == "lenient" ? eval::EvalMode::Lenient : eval::EvalMode::Strict,
                           std::cout);
    }
    if (*stats) return cli::cmd_stats(io, std::cout);
    if (*datagen) return cli::cmd_datagen(common, dg, std::cerr);
    if (*simulate) return cli::cmd_simulate(common, so, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
