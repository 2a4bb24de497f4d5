#include "groundcot/trace.hpp"

#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

namespace groundcot {

namespace {

constexpr std::string_view kWhitespace = " \t\n\r\f\v";

bool has_line_break(std::string_view s) {
  return s.find_first_of("\n\r") != std::string_view::npos;
}

void require_canonical_text(std::string_view s, std::string_view what) {
  if (trim(s).size() != s.size()) {
    throw TraceError(fmt::format("{} has leading or trailing whitespace", what));
  }
  if (contains_template_tag(s)) {
    throw TraceError(fmt::format("{} contains a template tag", what));
  }
}

double round_to_tenth(double v) { return std::round(v * 10.0) / 10.0; }

}  // namespace

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(kWhitespace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kWhitespace);
  return s.substr(first, last - first + 1);
}

bool contains_template_tag(std::string_view s) {
  for (auto tag : kTemplateTags) {
    if (s.find(tag) != std::string_view::npos) return true;
  }
  return false;
}

std::size_t GroundedTrace::total_points() const {
  std::size_t n = 0;
  for (const auto& step : steps) {
    if (step.annotation) n += step.annotation->points.size();
  }
  return n;
}

std::size_t DraftTrace::request_count() const {
  std::size_t n = 0;
  for (const auto& step : steps) n += step.request.has_value();
  return n;
}

std::vector<FormatProfile> all_profiles() {
  return {{Syntax::Xml, Indexing::ZeroBased},
          {Syntax::Xml, Indexing::OneBased},
          {Syntax::Json, Indexing::ZeroBased},
          {Syntax::Json, Indexing::OneBased}};
}

std::string to_string(const FormatProfile& profile) {
  return fmt::format("{}/{}", profile.syntax == Syntax::Xml ? "xml" : "json",
                     profile.index_base());
}

void validate(const Point2D& point) {
  if (!std::isfinite(point.x) || !std::isfinite(point.y)) {
    throw TraceError("point coordinate is not finite");
  }
  if (point.x < 0.0 || point.y < 0.0) {
    throw TraceError(fmt::format("point ({}, {}) has a negative coordinate", point.x, point.y));
  }
}

void validate(const PointAnnotation& annotation) {
  if (annotation.points.empty()) throw TraceError("annotation has no points");
  if (trim(annotation.description).empty()) throw TraceError("annotation description is empty");
  require_canonical_text(annotation.description, "annotation description");
  if (has_line_break(annotation.description)) {
    throw TraceError("annotation description contains a line break");
  }
  for (const auto& p : annotation.points) validate(p);
}

void validate(const ReasoningStep& step) {
  if (step.annotation) validate(*step.annotation);
  if (!step.annotation && trim(step.text).empty()) {
    throw TraceError("step has neither text nor annotation");
  }
  require_canonical_text(step.text, "step text");
  if (has_line_break(step.text)) throw TraceError("step text contains a line break");
}

void validate(const GroundedTrace& trace) {
  if (trace.steps.empty()) throw TraceError("trace has no steps");
  for (const auto& step : trace.steps) validate(step);
  if (trim(trace.answer).empty()) throw TraceError("answer is empty");
  require_canonical_text(trace.answer, "answer");
}

void validate(const DraftTrace& draft) {
  for (const auto& step : draft.steps) {
    if (step.request && step.request->declared_count < 1) {
      throw TraceError(fmt::format("point request '{}' declares {} points",
                                   step.request->description, step.request->declared_count));
    }
  }
}

bool is_valid(const GroundedTrace& trace) {
  try {
    validate(trace);
    return true;
  } catch (const TraceError&) {
    return false;
  }
}

bool equivalent(const GroundedTrace& a, const GroundedTrace& b, double coordinate_tolerance) {
  if (a.answer != b.answer || a.steps.size() != b.steps.size()) return false;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const auto& sa = a.steps[i];
    const auto& sb = b.steps[i];
    if (sa.text != sb.text || sa.annotation.has_value() != sb.annotation.has_value()) return false;
    if (!sa.annotation) continue;
    if (sa.annotation->description != sb.annotation->description) return false;
    const auto& pa = sa.annotation->points;
    const auto& pb = sb.annotation->points;
    if (pa.size() != pb.size()) return false;
    for (std::size_t k = 0; k < pa.size(); ++k) {
      if (std::abs(pa[k].x - pb[k].x) > coordinate_tolerance ||
          std::abs(pa[k].y - pb[k].y) > coordinate_tolerance) {
        return false;
      }
    }
  }
  return true;
}

namespace {

std::string serialize_xml(const GroundedTrace& trace, int base) {
  std::string out = "<think>";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& step = trace.steps[i];
    if (i > 0) out += "\n\n";
    if (step.annotation) {
      out += "<points";
      const auto& pts = step.annotation->points;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto idx = static_cast<int>(k) + base;
        out += fmt::format(" x{}=\"{:.1f}\" y{}=\"{:.1f}\"", idx, pts[k].x, idx, pts[k].y);
      }
      out += '>';
      out += step.annotation->description;
      out += "</points>";
    }
    out += step.text;
  }
  out += "</think><answer>";
  out += trace.answer;
  out += "</answer>";
  return out;
}

std::string serialize_json(const GroundedTrace& trace) {
  auto think = nlohmann::ordered_json::array();
  for (const auto& step : trace.steps) {
    nlohmann::ordered_json obj;
    if (step.annotation) {
      auto pts = nlohmann::ordered_json::array();
      for (const auto& p : step.annotation->points) {
        pts.push_back({{"x", round_to_tenth(p.x)}, {"y", round_to_tenth(p.y)}});
      }
      obj["points"] = std::move(pts);
      obj["description"] = step.annotation->description;
    }
    obj["text"] = step.text;
    think.push_back(std::move(obj));
  }
  nlohmann::ordered_json doc;
  doc["think"] = std::move(think);
  doc["answer"] = trace.answer;
  return doc.dump();
}

}  // namespace

std::string serialize(const GroundedTrace& trace, const FormatProfile& profile) {
  validate(trace);
  if (profile.syntax == Syntax::Json) return serialize_json(trace);
  return serialize_xml(trace, profile.index_base());
}

}  // namespace groundcot
