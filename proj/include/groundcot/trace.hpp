#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace groundcot {

/// A raw-resolution pixel coordinate. Both components are finite and >= 0.
struct Point2D {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2D&) const = default;
};

/// A described visual element with one or more coordinates.
struct PointAnnotation {
  std::string description;
  std::vector<Point2D> points;

  bool operator==(const PointAnnotation&) const = default;
};

struct ReasoningStep {
  std::optional<PointAnnotation> annotation;
  std::string text;

  bool operator==(const ReasoningStep&) const = default;
};

/// A parsed grounded chain-of-thought response: ordered steps and a final answer.
///
/// Canonical text fields carry no leading or trailing whitespace, step text
/// and descriptions carry no line breaks, and no field contains one of the
/// template tags (see `kTemplateTags`). `validate()` enforces all of it.
struct GroundedTrace {
  std::vector<ReasoningStep> steps;
  std::string answer;

  bool operator==(const GroundedTrace&) const = default;

  std::size_t total_points() const;
};

enum class Syntax { Xml, Json };
enum class Indexing { ZeroBased, OneBased };

struct FormatProfile {
  Syntax syntax = Syntax::Xml;
  Indexing indexing = Indexing::ZeroBased;

  int index_base() const { return indexing == Indexing::ZeroBased ? 0 : 1; }
  bool operator==(const FormatProfile&) const = default;
};

inline constexpr FormatProfile kCanonicalProfile{};

/// All four syntax/indexing combinations.
std::vector<FormatProfile> all_profiles();

std::string to_string(const FormatProfile& profile);

/// Intermediate generator-side representation: a step may ask the grounder
/// for `declared_count` points matching `description`.
struct PointRequest {
  std::string description;
  int declared_count = 1;

  bool operator==(const PointRequest&) const = default;
};

struct DraftStep {
  std::string text;
  std::optional<PointRequest> request;

  bool operator==(const DraftStep&) const = default;
};

struct DraftTrace {
  std::vector<DraftStep> steps;

  std::size_t request_count() const;
};

/// Tags that delimit the template. No text field may contain any of them.
inline constexpr std::string_view kTemplateTags[] = {
    "<think>", "</think>", "<points", "</points>", "<answer>", "</answer>"};

class TraceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string_view trim(std::string_view s);
bool contains_template_tag(std::string_view s);

/// Throws TraceError naming the first violated invariant.
void validate(const Point2D& point);
void validate(const PointAnnotation& annotation);
void validate(const ReasoningStep& step);
void validate(const GroundedTrace& trace);
void validate(const DraftTrace& draft);

/// Non-throwing form of validate().
bool is_valid(const GroundedTrace& trace);

/// Structural equality with coordinates compared to within `coordinate_tolerance`.
bool equivalent(const GroundedTrace& a, const GroundedTrace& b, double coordinate_tolerance);

/// Renders a trace under `profile`. Throws TraceError if the trace is invalid.
///
/// XML: `<think>STEP\n\nSTEP...</think><answer>ANSWER</answer>` where an annotated
/// step is `<points x0="..." y0="..." ...>description</points>text`. Coordinates
/// are written with one decimal place. Steps are separated by a blank line so
/// that losing one line break does not merge two steps.
///
/// JSON: `{"think":[{"points":[{"x":..,"y":..}],"description":"..","text":".."}],"answer":".."}`
/// with points/description omitted on unannotated steps. Point order is the array
/// order, so the indexing scheme does not change the JSON form.
std::string serialize(const GroundedTrace& trace, const FormatProfile& profile = kCanonicalProfile);

}  // namespace groundcot
