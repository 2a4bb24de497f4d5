#include "groundcot/parser.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

namespace groundcot {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kPointsOpen = "<points";
constexpr std::string_view kPointsClose = "</points>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool all_space(std::string_view s) { return std::all_of(s.begin(), s.end(), is_space); }

std::vector<std::size_t> find_all(std::string_view haystack, std::string_view needle) {
  std::vector<std::size_t> hits;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + 1)) {
    hits.push_back(pos);
  }
  return hits;
}

bool has_line_break(std::string_view s) {
  return s.find_first_of("\n\r") != std::string_view::npos;
}

class Diagnostics {
 public:
  explicit Diagnostics(std::vector<Diagnostic>& sink) : sink_(sink) {}
  bool fail(std::size_t position, std::string message) {
    sink_.push_back({position, std::move(message)});
    return false;
  }

 private:
  std::vector<Diagnostic>& sink_;
};

// Canonical non-negative decimal: digits with an optional fractional part.
std::optional<double> parse_coordinate(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i == 0) return std::nullopt;
  if (i < s.size()) {
    if (s[i] != '.') return std::nullopt;
    const auto frac_start = ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
    if (i == frac_start || i != s.size()) return std::nullopt;
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// Attribute index: "0" or digits without a leading zero.
std::optional<int> parse_index(std::string_view s) {
  if (s.empty() || s.size() > 6 || !std::all_of(s.begin(), s.end(), is_digit)) return std::nullopt;
  if (s.size() > 1 && s[0] == '0') return std::nullopt;
  int v = 0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

// Parses `<points ATTRS>description</points>` starting at body[start].
// On success returns the annotation and sets `end` past the closing tag.
std::optional<PointAnnotation> parse_points_element(std::string_view body, std::size_t start,
                                                    std::size_t offset, int base,
                                                    std::size_t& end, Diagnostics& diag) {
  std::size_t i = start + kPointsOpen.size();
  std::map<int, double> xs;
  std::map<int, double> ys;
  const auto at = [&](std::size_t p) { return offset + p; };

  for (;;) {
    const auto ws_start = i;
    while (i < body.size() && is_space(body[i])) ++i;
    if (i >= body.size()) {
      diag.fail(at(i), "unterminated <points> tag");
      return std::nullopt;
    }
    if (body[i] == '>') {
      ++i;
      break;
    }
    if (i == ws_start) {
      diag.fail(at(i), "expected whitespace before <points> attribute");
      return std::nullopt;
    }
    const auto name_start = i;
    while (i < body.size() && body[i] != '=' && body[i] != '>' && !is_space(body[i])) ++i;
    const auto name = body.substr(name_start, i - name_start);
    if (i >= body.size() || body[i] != '=') {
      diag.fail(at(name_start), fmt::format("attribute '{}' has no value", name));
      return std::nullopt;
    }
    ++i;
    if (i >= body.size() || body[i] != '"') {
      diag.fail(at(i), fmt::format("attribute '{}' value is not quoted", name));
      return std::nullopt;
    }
    const auto value_start = ++i;
    const auto value_end = body.find('"', value_start);
    if (value_end == std::string_view::npos) {
      diag.fail(at(value_start), "unterminated attribute value");
      return std::nullopt;
    }
    const auto value = body.substr(value_start, value_end - value_start);
    i = value_end + 1;

    const auto index = name.size() >= 2 && (name[0] == 'x' || name[0] == 'y')
                           ? parse_index(name.substr(1))
                           : std::nullopt;
    if (!index) {
      diag.fail(at(name_start), fmt::format("unknown <points> attribute '{}'", name));
      return std::nullopt;
    }
    const auto coord = parse_coordinate(value);
    if (!coord) {
      diag.fail(at(value_start), fmt::format("attribute '{}' has malformed value '{}'", name, value));
      return std::nullopt;
    }
    auto& axis = name[0] == 'x' ? xs : ys;
    if (!axis.emplace(*index, *coord).second) {
      diag.fail(at(name_start), fmt::format("duplicate attribute '{}'", name));
      return std::nullopt;
    }
  }

  if (xs.empty()) {
    diag.fail(at(start), "<points> carries no coordinates");
    return std::nullopt;
  }
  // Index sets must be exactly {base, ..., base + n - 1} on both axes.
  const auto n = static_cast<int>(xs.size());
  const auto contiguous = [&](const std::map<int, double>& axis) {
    return static_cast<int>(axis.size()) == n && axis.begin()->first == base &&
           axis.rbegin()->first == base + n - 1;
  };
  if (!contiguous(xs) || !contiguous(ys)) {
    diag.fail(at(start), fmt::format("<points> indices are not contiguous from {}", base));
    return std::nullopt;
  }

  const auto close = body.find(kPointsClose, i);
  if (close == std::string_view::npos) {
    diag.fail(at(i), "missing </points>");
    return std::nullopt;
  }
  const auto raw_description = body.substr(i, close - i);
  if (raw_description.find(kPointsOpen) != std::string_view::npos) {
    diag.fail(at(i), "nested <points> element");
    return std::nullopt;
  }
  const auto description = trim(raw_description);
  if (description.empty()) {
    diag.fail(at(i), "empty <points> description");
    return std::nullopt;
  }
  if (has_line_break(description)) {
    diag.fail(at(i), "<points> description spans multiple lines");
    return std::nullopt;
  }

  PointAnnotation annotation{std::string(description), {}};
  for (int k = base; k < base + n; ++k) annotation.points.push_back({xs.at(k), ys.at(k)});
  end = close + kPointsClose.size();
  return annotation;
}

// Steps are delimited by line breaks and by <points> elements; an element
// starts a new step whose text is the remainder of its line.
std::optional<std::vector<ReasoningStep>> parse_think_body(std::string_view body,
                                                           std::size_t offset, int base,
                                                           Diagnostics& diag) {
  std::vector<ReasoningStep> steps;
  std::optional<ReasoningStep> current;

  const auto flush = [&] {
    if (!current) return;
    current->text = std::string(trim(current->text));
    if (current->annotation || !current->text.empty()) steps.push_back(std::move(*current));
    current.reset();
  };
  const auto take_text = [&](std::string_view segment) {
    std::size_t line_start = 0;
    for (bool first = true;; first = false) {
      const auto nl = segment.find('\n', line_start);
      const auto line = segment.substr(line_start, nl == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : nl - line_start);
      if (!first) flush();
      if (!current) current.emplace();
      current->text += line;
      if (nl == std::string_view::npos) break;
      line_start = nl + 1;
    }
  };

  for (auto tag : {kAnswerOpen, kAnswerClose}) {
    if (const auto pos = body.find(tag); pos != std::string_view::npos) {
      diag.fail(offset + pos, fmt::format("{} inside think block", tag));
      return std::nullopt;
    }
  }

  std::size_t pos = 0;
  for (;;) {
    const auto next = body.find(kPointsOpen, pos);
    const auto segment = body.substr(pos, next == std::string_view::npos ? std::string_view::npos
                                                                         : next - pos);
    if (const auto stray = segment.find(kPointsClose); stray != std::string_view::npos) {
      diag.fail(offset + pos + stray, "</points> without matching <points>");
      return std::nullopt;
    }
    take_text(segment);
    if (next == std::string_view::npos) break;

    std::size_t end = 0;
    auto annotation = parse_points_element(body, next, offset, base, end, diag);
    if (!annotation) return std::nullopt;
    flush();
    current.emplace();
    current->annotation = std::move(*annotation);
    pos = end;
  }
  flush();

  if (steps.empty()) {
    diag.fail(offset, "think block has no reasoning steps");
    return std::nullopt;
  }
  for (const auto& step : steps) {
    if (has_line_break(step.text)) {
      diag.fail(offset, "step text contains a line break");
      return std::nullopt;
    }
  }
  return steps;
}

void parse_xml(std::string_view raw, int base, ParseOutcome& out) {
  Diagnostics diag(out.diagnostics);
  const auto think_opens = find_all(raw, kThinkOpen);
  const auto think_closes = find_all(raw, kThinkClose);
  const auto answer_opens = find_all(raw, kAnswerOpen);
  const auto answer_closes = find_all(raw, kAnswerClose);

  std::optional<std::vector<ReasoningStep>> steps;
  const bool one_think = think_opens.size() == 1 && think_closes.size() == 1;
  if (think_opens.empty()) {
    diag.fail(0, "missing <think>");
  } else if (!one_think) {
    diag.fail(think_opens.size() > 1 ? think_opens[1] : think_opens[0],
              fmt::format("expected exactly one think block, found {} <think> and {} </think>",
                          think_opens.size(), think_closes.size()));
  } else if (think_closes[0] < think_opens[0]) {
    diag.fail(think_closes[0], "</think> before <think>");
  } else if (!all_space(raw.substr(0, think_opens[0]))) {
    diag.fail(0, "text before <think>");
  } else {
    const auto body_start = think_opens[0] + kThinkOpen.size();
    steps = parse_think_body(raw.substr(body_start, think_closes[0] - body_start), body_start,
                             base, diag);
  }
  out.think_intact = steps.has_value();

  std::optional<std::string> answer;
  if (answer_opens.empty()) {
    diag.fail(raw.size(), "missing <answer>");
  } else if (answer_opens.size() != 1 || answer_closes.size() != 1) {
    diag.fail(answer_opens.back(),
              fmt::format("expected exactly one answer block, found {} <answer> and {} </answer>",
                          answer_opens.size(), answer_closes.size()));
  } else if (answer_closes[0] < answer_opens[0]) {
    diag.fail(answer_closes[0], "</answer> before <answer>");
  } else {
    const auto open = answer_opens[0];
    const auto close = answer_closes[0];
    const auto body_start = open + kAnswerOpen.size();
    const auto body = trim(raw.substr(body_start, close - body_start));
    const auto tail = raw.substr(close + kAnswerClose.size());
    const bool think_after = std::any_of(think_opens.begin(), think_opens.end(),
                                         [&](auto p) { return p > open; }) ||
                             std::any_of(think_closes.begin(), think_closes.end(),
                                         [&](auto p) { return p > open; });
    if (think_after) {
      diag.fail(open, "think block after <answer>");
    } else if (think_closes.size() == 1 &&
               !all_space(raw.substr(think_closes[0] + kThinkClose.size(),
                                     open - think_closes[0] - kThinkClose.size()))) {
      diag.fail(think_closes[0] + kThinkClose.size(), "text between </think> and <answer>");
    } else if (body.empty()) {
      diag.fail(body_start, "empty answer");
    } else if (contains_template_tag(body)) {
      diag.fail(body_start, "template tag inside answer");
    } else if (contains_template_tag(tail)) {
      diag.fail(close + kAnswerClose.size(), "template tag after </answer>");
    } else {
      answer = std::string(body);
    }
  }
  out.answer_extractable = answer.has_value();
  out.extracted_answer = answer;

  if (steps && answer) out.trace = GroundedTrace{std::move(*steps), std::move(*answer)};
}

std::optional<std::string> canonical_json_text(const nlohmann::json& value, bool allow_empty,
                                               std::string_view what, Diagnostics& diag) {
  if (!value.is_string()) {
    diag.fail(0, fmt::format("{} is not a string", what));
    return std::nullopt;
  }
  const auto text = trim(value.get_ref<const std::string&>());
  if (!allow_empty && text.empty()) {
    diag.fail(0, fmt::format("{} is empty", what));
    return std::nullopt;
  }
  if (contains_template_tag(text)) {
    diag.fail(0, fmt::format("{} contains a template tag", what));
    return std::nullopt;
  }
  return std::string(text);
}

std::optional<ReasoningStep> parse_json_step(const nlohmann::json& obj, std::size_t index,
                                             Diagnostics& diag) {
  const auto where = [&](std::string_view what) { return fmt::format("think[{}].{}", index, what); };
  if (!obj.is_object()) {
    diag.fail(0, fmt::format("think[{}] is not an object", index));
    return std::nullopt;
  }
  for (const auto& [key, _] : obj.items()) {
    if (key != "points" && key != "description" && key != "text") {
      diag.fail(0, fmt::format("unknown key '{}' in think[{}]", key, index));
      return std::nullopt;
    }
  }
  if (!obj.contains("text")) {
    diag.fail(0, fmt::format("think[{}] has no text", index));
    return std::nullopt;
  }
  if (obj.contains("points") != obj.contains("description")) {
    diag.fail(0, fmt::format("think[{}] must carry both points and description or neither", index));
    return std::nullopt;
  }

  ReasoningStep step;
  auto text = canonical_json_text(obj.at("text"), true, where("text"), diag);
  if (!text) return std::nullopt;
  step.text = std::move(*text);

  if (obj.contains("points")) {
    const auto& pts = obj.at("points");
    if (!pts.is_array() || pts.empty()) {
      diag.fail(0, fmt::format("{} must be a non-empty array", where("points")));
      return std::nullopt;
    }
    PointAnnotation annotation;
    for (const auto& p : pts) {
      if (!p.is_object() || p.size() != 2 || !p.contains("x") || !p.contains("y") ||
          !p.at("x").is_number() || !p.at("y").is_number()) {
        diag.fail(0, fmt::format("{} entries must be {{\"x\":n,\"y\":n}}", where("points")));
        return std::nullopt;
      }
      const Point2D point{p.at("x").get<double>(), p.at("y").get<double>()};
      if (!std::isfinite(point.x) || !std::isfinite(point.y) || point.x < 0 || point.y < 0) {
        diag.fail(0, fmt::format("{} has an out-of-range coordinate", where("points")));
        return std::nullopt;
      }
      annotation.points.push_back(point);
    }
    auto description = canonical_json_text(obj.at("description"), false, where("description"), diag);
    if (!description) return std::nullopt;
    annotation.description = std::move(*description);
    step.annotation = std::move(annotation);
  }

  if (!step.annotation && step.text.empty()) {
    diag.fail(0, fmt::format("think[{}] carries no content", index));
    return std::nullopt;
  }
  if (has_line_break(step.text) ||
      (step.annotation && has_line_break(step.annotation->description))) {
    diag.fail(0, fmt::format("think[{}] contains a line break", index));
    return std::nullopt;
  }
  return step;
}

void parse_json(std::string_view raw, ParseOutcome& out) {
  Diagnostics diag(out.diagnostics);
  const auto doc = nlohmann::json::parse(trim(raw), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    diag.fail(0, "input is not a JSON object");
    return;
  }

  std::optional<std::vector<ReasoningStep>> steps;
  const auto unknown = std::find_if(doc.items().begin(), doc.items().end(), [](const auto& kv) {
    return kv.key() != "think" && kv.key() != "answer";
  });
  if (unknown != doc.items().end()) {
    diag.fail(0, fmt::format("unknown top-level key '{}'", unknown.key()));
  } else if (!doc.contains("think")) {
    diag.fail(0, "missing think");
  } else if (!doc.at("think").is_array() || doc.at("think").empty()) {
    diag.fail(0, "think must be a non-empty array");
  } else {
    std::vector<ReasoningStep> parsed;
    for (std::size_t i = 0; i < doc.at("think").size(); ++i) {
      auto step = parse_json_step(doc.at("think")[i], i, diag);
      if (!step) break;
      parsed.push_back(std::move(*step));
    }
    if (parsed.size() == doc.at("think").size()) steps = std::move(parsed);
  }
  out.think_intact = steps.has_value();

  std::optional<std::string> answer;
  if (!doc.contains("answer")) {
    diag.fail(0, "missing answer");
  } else {
    answer = canonical_json_text(doc.at("answer"), false, "answer", diag);
  }
  out.answer_extractable = answer.has_value();
  out.extracted_answer = answer;

  if (steps && answer) out.trace = GroundedTrace{std::move(*steps), std::move(*answer)};
}

}  // namespace

ParseOutcome parse(std::string_view raw, const FormatProfile& profile) {
  ParseOutcome out;
  if (profile.syntax == Syntax::Json) {
    parse_json(raw, out);
  } else {
    parse_xml(raw, profile.index_base(), out);
  }
  return out;
}

std::optional<std::string> extract_answer(std::string_view raw) {
  const auto first_open = raw.find(kAnswerOpen);
  if (first_open != std::string_view::npos) {
    const auto close = raw.find(kAnswerClose, first_open);
    if (close == std::string_view::npos) return std::nullopt;
    // Innermost opener before the first close.
    const auto open = raw.rfind(kAnswerOpen, close);
    const auto body = trim(raw.substr(open + kAnswerOpen.size(), close - open - kAnswerOpen.size()));
    if (body.empty()) return std::nullopt;
    return std::string(body);
  }

  const auto doc = nlohmann::json::parse(trim(raw), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("answer") ||
      !doc.at("answer").is_string()) {
    return std::nullopt;
  }
  const auto body = trim(doc.at("answer").get_ref<const std::string&>());
  if (body.empty()) return std::nullopt;
  return std::string(body);
}

}  // namespace groundcot
