#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "groundcot/trace.hpp"

namespace groundcot {

struct Diagnostic {
  std::size_t position = 0;  // byte offset into the raw text
  std::string message;
};

/// Result of strict template parsing.
///
/// `think_intact` and `answer_extractable` are the two checks behind the format
/// reward. A trace is produced only when both hold.
struct ParseOutcome {
  std::optional<GroundedTrace> trace;
  bool think_intact = false;
  bool answer_extractable = false;
  std::optional<std::string> extracted_answer;
  std::vector<Diagnostic> diagnostics;

  bool fully_valid() const { return think_intact && answer_extractable; }
};

/// Parses raw model output under `profile`. Total: never throws, failures are
/// reported through the two checks and `diagnostics`.
ParseOutcome parse(std::string_view raw, const FormatProfile& profile = kCanonicalProfile);

/// Lenient evaluation-path extraction: trimmed body of the first
/// `<answer>...</answer>` block regardless of think validity. Falls back to the
/// "answer" string of a JSON object when no answer tags are present.
std::optional<std::string> extract_answer(std::string_view raw);

}  // namespace groundcot
