#include "groundcot/eval.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "groundcot/decimal.hpp"
#include "groundcot/parser.hpp"

namespace groundcot::eval {

EvalReport make_report(std::size_t n, std::size_t n_compliant, std::size_t n_correct_overall,
                       std::size_t n_correct_inner) {
  if (n == 0) throw EvalError("evaluation over zero records");
  if (n_compliant > n || n_correct_overall > n || n_correct_inner > n_compliant) {
    throw EvalError(fmt::format("inconsistent counts n={} compliant={} overall={} inner={}", n,
                                n_compliant, n_correct_overall, n_correct_inner));
  }
  EvalReport r{n, n_compliant, n_correct_overall, n_correct_inner};
  const auto dn = static_cast<double>(n);
  r.format = static_cast<double>(n_compliant) / dn;
  r.overall = static_cast<double>(n_correct_overall) / dn;
  r.inner = n_compliant == 0 ? 0.0
                             : static_cast<double>(n_correct_inner) / static_cast<double>(n_compliant);
  return r;
}

EvalReport evaluate(std::span<const PredictionRecord> records, const FormatProfile& profile,
                    const MatchPolicy& policy, EvalMode mode) {
  if (records.empty()) throw EvalError("evaluation over zero records");
  std::size_t compliant = 0;
  std::size_t correct_overall = 0;
  std::size_t correct_inner = 0;
  for (const auto& rec : records) {
    const bool is_compliant = format_reward(rec.raw_output, profile) == 1.0;
    const auto answer = extract_answer(rec.raw_output);
    const bool is_correct = answer && answers_match(*answer, rec.gold_answer, policy);
    compliant += is_compliant;
    correct_inner += is_compliant && is_correct;
    correct_overall += mode == EvalMode::Strict ? is_compliant && is_correct : is_correct;
  }
  return make_report(records.size(), compliant, correct_overall, correct_inner);
}

std::string percent(double fraction) {
  return (Decimal::from_double(fraction) * Decimal(100, 0)).to_fixed(2);
}

std::string report_table(const EvalReport& r) {
  std::string out;
  out += fmt::format("{:<10} {:>8} {:>8} {:>8}\n", "", "Overall", "Inner", "Format");
  out += fmt::format("{:<10} {:>8} {:>8} {:>8}\n", "percent", percent(r.overall), percent(r.inner),
                     percent(r.format));
  out += fmt::format("{:<10} {:>8} {:>8} {:>8}\n", "count", r.n_correct_overall, r.n_correct_inner,
                     r.n_compliant);
  out += fmt::format("{:<10} {:>8} {:>8} {:>8}\n", "of", r.n, r.n_compliant, r.n);
  return out;
}

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json doc;
  doc["n"] = r.n;
  doc["n_compliant"] = r.n_compliant;
  doc["n_correct_overall"] = r.n_correct_overall;
  doc["n_correct_inner"] = r.n_correct_inner;
  doc["overall"] = r.overall;
  doc["inner"] = r.inner;
  doc["format"] = r.format;
  return doc.dump();
}

void emit_report(const EvalReport& report, std::ostream& out) {
  out << report_table(report) << report_json(report) << '\n';
}

void emit_report(const EvalReport& report, const std::filesystem::path& destination) {
  if (destination.empty()) throw EvalError("cannot write report to empty path ''");
  std::ofstream out(destination);
  if (!out) throw EvalError(fmt::format("cannot open report destination '{}'", destination.string()));
  emit_report(report, out);
  out.flush();
  if (!out) throw EvalError(fmt::format("failed writing report to '{}'", destination.string()));
}

IdentityCheck check_product_identity(double inner_percent, double format_percent,
                                     double overall_percent, double tolerance) {
  // Percent * percent carries a factor of 100 too many.
  const auto product = Decimal::from_double(inner_percent) * Decimal::from_double(format_percent);
  const auto scaled = Decimal(product.mantissa(), product.scale() + 2);
  IdentityCheck check;
  check.predicted_overall = std::stod(scaled.to_fixed(2));
  check.printed_overall = overall_percent;
  check.holds = std::abs(check.predicted_overall - overall_percent) <= tolerance + 1e-9;
  return check;
}

std::vector<PredictionRecord> read_records(std::istream& in) {
  std::vector<PredictionRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw EvalError(fmt::format("line {}: not a JSON object", line_no));
    }
    PredictionRecord rec;
    for (auto [key, field] : {std::pair{"id", &rec.id}, std::pair{"raw_output", &rec.raw_output},
                              std::pair{"gold_answer", &rec.gold_answer}}) {
      if (!doc.contains(key) || !doc.at(key).is_string()) {
        throw EvalError(fmt::format("line {}: missing string field '{}'", line_no, key));
      }
      *field = doc.at(key).get<std::string>();
    }
    if (!ids.insert(rec.id).second) {
      throw EvalError(fmt::format("line {}: duplicate id '{}'", line_no, rec.id));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace groundcot::eval
