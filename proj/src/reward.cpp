#include "groundcot/reward.hpp"

#include <cctype>
#include <cmath>
#include <regex>
#include <stdexcept>

#include <fmt/format.h>

#include "groundcot/decimal.hpp"
#include "groundcot/parser.hpp"

namespace groundcot {

void MatchPolicy::validate() const {
  if (!(numeric_relative_tolerance >= 0.0 && numeric_relative_tolerance < 1.0)) {
    throw std::invalid_argument(fmt::format(
        "numeric_relative_tolerance must lie in [0, 1), got {}", numeric_relative_tolerance));
  }
  if (!(zero_gold_absolute_tolerance >= 0.0) || !std::isfinite(zero_gold_absolute_tolerance)) {
    throw std::invalid_argument(fmt::format("zero_gold_absolute_tolerance must be finite and >= 0, got {}",
                                            zero_gold_absolute_tolerance));
  }
}

std::string normalize_answer(std::string_view answer) {
  std::string out;
  bool pending_space = false;
  for (const char c : trim(answer)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string numeric_form(std::string_view answer) {
  static const std::regex plain(R"([+-]?(\d+(\.\d+)?|\.\d+))");
  static const std::regex grouped(R"([+-]?\d{1,3}(,\d{3})+(\.\d+)?)");

  auto text = normalize_answer(answer);
  if (!text.empty() && text.back() == '%') text.pop_back();
  if (std::regex_match(text, plain)) return text;
  if (std::regex_match(text, grouped)) {
    std::erase(text, ',');
    return text;
  }
  return {};
}

double format_reward(std::string_view raw, const FormatProfile& profile) {
  return parse(raw, profile).fully_valid() ? 1.0 : 0.0;
}

bool answers_match(std::string_view predicted, std::string_view gold, const MatchPolicy& policy) {
  const auto p_text = numeric_form(predicted);
  const auto g_text = numeric_form(gold);
  if (!p_text.empty() && !g_text.empty()) {
    const auto p = *Decimal::parse(p_text);
    const auto g = *Decimal::parse(g_text);
    if (g.is_zero()) return p.abs() <= Decimal::from_double(policy.zero_gold_absolute_tolerance);
    return (p - g).abs() <= Decimal::from_double(policy.numeric_relative_tolerance) * g.abs();
  }
  const auto p_norm = normalize_answer(predicted);
  return !p_norm.empty() && p_norm == normalize_answer(gold);
}

RewardBreakdown score(std::string_view raw, std::string_view gold, const FormatProfile& profile,
                      const MatchPolicy& policy) {
  RewardBreakdown r;
  r.format_reward = format_reward(raw, profile);
  const auto answer = extract_answer(raw);
  r.accuracy_reward = answer && answers_match(*answer, gold, policy) ? 1.0 : 0.0;
  r.total = r.format_reward + r.accuracy_reward;
  return r;
}

}  // namespace groundcot
