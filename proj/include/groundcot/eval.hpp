#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "groundcot/reward.hpp"
#include "groundcot/trace.hpp"

namespace groundcot::eval {

struct PredictionRecord {
  std::string id;
  std::string raw_output;
  std::string gold_answer;
};

/// Strict: a non-compliant record never counts as correct, so
/// Overall = Inner * Format holds exactly. Lenient: Overall uses answer
/// extraction regardless of compliance.
enum class EvalMode { Strict, Lenient };

struct EvalReport {
  std::size_t n = 0;
  std::size_t n_compliant = 0;
  std::size_t n_correct_overall = 0;
  std::size_t n_correct_inner = 0;
  double overall = 0.0;
  double inner = 0.0;
  double format = 0.0;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

EvalReport evaluate(std::span<const PredictionRecord> records,
                    const FormatProfile& profile = kCanonicalProfile,
                    const MatchPolicy& policy = {}, EvalMode mode = EvalMode::Strict);

/// Builds a report from counts, deriving the three fractions.
EvalReport make_report(std::size_t n, std::size_t n_compliant, std::size_t n_correct_overall,
                       std::size_t n_correct_inner);

/// Fraction rendered as a percentage with two decimals, rounding half up on
/// the fraction's shortest decimal form (0.79275 -> "79.28").
std::string percent(double fraction);

std::string report_table(const EvalReport& report);
std::string report_json(const EvalReport& report);

/// Writes the table followed by the JSON object on its own line.
void emit_report(const EvalReport& report, std::ostream& out);
/// Same, to a file. Throws EvalError naming the path on failure.
void emit_report(const EvalReport& report, const std::filesystem::path& destination);

/// Checks a printed table row: Inner(%) x Format(%) / 100, rounded to two
/// decimals, equals the printed Overall(%) within `tolerance` percentage points.
struct IdentityCheck {
  double predicted_overall = 0.0;  // percent, two decimals
  double printed_overall = 0.0;
  bool holds = false;
};
IdentityCheck check_product_identity(double inner_percent, double format_percent,
                                     double overall_percent, double tolerance = 0.01);

/// JSONL {id, raw_output, gold_answer}; ids must be unique. Throws EvalError with line numbers.
std::vector<PredictionRecord> read_records(std::istream& in);

}  // namespace groundcot::eval
