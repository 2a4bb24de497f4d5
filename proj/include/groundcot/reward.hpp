#pragma once

#include <string>
#include <string_view>

#include "groundcot/trace.hpp"

namespace groundcot {

/// Per-response rewards. Each component is an indicator in {0, 1}.
struct RewardBreakdown {
  double format_reward = 0.0;
  double accuracy_reward = 0.0;
  double total = 0.0;

  bool operator==(const RewardBreakdown&) const = default;
};

/// How predicted answers are compared against gold answers.
///
/// Numeric answers match when |predicted - gold| <= numeric_relative_tolerance * |gold|.
/// A gold value of exactly zero uses zero_gold_absolute_tolerance instead.
struct MatchPolicy {
  double numeric_relative_tolerance = 0.05;
  double zero_gold_absolute_tolerance = 0.0;

  void validate() const;
};

/// Trimmed, casefolded, whitespace-collapsed form used for exact matching.
std::string normalize_answer(std::string_view answer);

/// Canonical numeric text of `answer` (sign, digits, point; no "%" or
/// thousands separators) if it reads as a plain decimal number, else empty.
std::string numeric_form(std::string_view answer);

double format_reward(std::string_view raw, const FormatProfile& profile = kCanonicalProfile);

/// Soft numeric / exact text match. Not symmetric: the tolerance scales with |gold|.
bool answers_match(std::string_view predicted, std::string_view gold,
                   const MatchPolicy& policy = {});

/// Format reward from the strict parser plus accuracy reward from the lenient
/// answer extraction. The two are independent, so (0, 1) is reachable.
RewardBreakdown score(std::string_view raw, std::string_view gold,
                      const FormatProfile& profile = kCanonicalProfile,
                      const MatchPolicy& policy = {});

}  // namespace groundcot
