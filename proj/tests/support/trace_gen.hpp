#pragma once

// Random valid-trace generator and single-deletion damage classifier, shared by
// the unit and acceptance suites.

#include <random>
#include <string>
#include <vector>

#include "groundcot/trace.hpp"

namespace groundcot::testing {

inline std::string random_words(std::mt19937_64& rng, int min_words, int max_words) {
  static constexpr std::string_view alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,;:!?'\"()<>=/-+%$";
  std::uniform_int_distribution<int> words(min_words, max_words);
  std::uniform_int_distribution<int> len(1, 9);
  std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1);
  for (;;) {
    std::string out;
    const int n = words(rng);
    for (int w = 0; w < n; ++w) {
      if (w) out += ' ';
      const int l = len(rng);
      for (int i = 0; i < l; ++i) out += alphabet[ch(rng)];
    }
    if (!contains_template_tag(out)) return out;
  }
}

/// Coordinates are multiples of 0.1 so they survive one-decimal serialization exactly.
inline GroundedTrace random_trace(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> steps(1, 5);
  std::uniform_int_distribution<int> npoints(1, 4);
  std::uniform_int_distribution<int> tenths(0, 40000);
  std::bernoulli_distribution annotated(0.6);
  std::bernoulli_distribution empty_text(0.15);

  GroundedTrace t;
  const int n = steps(rng);
  for (int i = 0; i < n; ++i) {
    ReasoningStep s;
    if (annotated(rng)) {
      PointAnnotation a{random_words(rng, 1, 4), {}};
      const int k = npoints(rng);
      for (int j = 0; j < k; ++j) a.points.push_back({tenths(rng) / 10.0, tenths(rng) / 10.0});
      s.annotation = std::move(a);
      s.text = empty_text(rng) ? "" : random_words(rng, 1, 8);
    } else {
      s.text = random_words(rng, 1, 8);
    }
    t.steps.push_back(std::move(s));
  }
  t.answer = random_words(rng, 1, 3);
  return t;
}

/// True when `damaged` is `original` with one character removed, or (because a
/// deleted byte can merge a JSON escape with its neighbour) with two adjacent
/// characters replaced by one, after trimming.
inline bool is_one_char_deletion(const std::string& original, const std::string& damaged) {
  if (damaged == original) return true;
  for (std::size_t i = 0; i < original.size(); ++i) {
    auto cut = original;
    cut.erase(i, 1);
    if (std::string(trim(cut)) == damaged) return true;
    if (i + 1 < original.size()) {
      for (const char c : damaged) {
        auto merged = original;
        merged.replace(i, 2, 1, c);
        if (std::string(trim(merged)) == damaged) return true;
      }
    }
  }
  return false;
}

/// True when `damaged` equals `original` except for one content field: a text,
/// description or answer damaged as above, or one changed coordinate
/// value. This is the only way a single-character deletion may still parse.
inline bool is_content_damage(const GroundedTrace& original, const GroundedTrace& damaged) {
  if (damaged.steps.size() + 1 == original.steps.size()) {
    // A one-character unannotated step can vanish entirely.
    for (std::size_t i = 0; i < original.steps.size(); ++i) {
      const auto& s = original.steps[i];
      if (s.annotation || s.text.size() != 1) continue;
      auto without = original;
      without.steps.erase(without.steps.begin() + static_cast<std::ptrdiff_t>(i));
      if (without == damaged) return true;
    }
    return false;
  }
  if (original.steps.size() != damaged.steps.size()) return false;
  int changed = 0;
  const auto field = [&](const std::string& a, const std::string& b) {
    if (a == b) return true;
    ++changed;
    return is_one_char_deletion(a, b);
  };
  if (!field(original.answer, damaged.answer)) return false;
  for (std::size_t i = 0; i < original.steps.size(); ++i) {
    const auto& a = original.steps[i];
    const auto& b = damaged.steps[i];
    if (a.annotation.has_value() != b.annotation.has_value()) return false;
    if (!field(a.text, b.text)) return false;
    if (!a.annotation) continue;
    if (!field(a.annotation->description, b.annotation->description)) return false;
    if (a.annotation->points.size() != b.annotation->points.size()) return false;
    for (std::size_t k = 0; k < a.annotation->points.size(); ++k) {
      changed += a.annotation->points[k].x != b.annotation->points[k].x;
      changed += a.annotation->points[k].y != b.annotation->points[k].y;
    }
  }
  return changed <= 1;
}

}  // namespace groundcot::testing
