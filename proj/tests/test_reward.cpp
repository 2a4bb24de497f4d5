#include <doctest.h>

#include <random>

#include "groundcot/decimal.hpp"
#include "groundcot/parser.hpp"
#include "groundcot/reward.hpp"
#include "support/trace_gen.hpp"

using namespace groundcot;

TEST_CASE("format_reward") {
  CHECK(format_reward("<think>step one</think><answer>42</answer>") == 1.0);
  CHECK(format_reward(R"(<think><points x0="5" y0="6">a bar</points>read it</think>)") == 0.0);
  CHECK(format_reward(R"(<think><points x0="1" y0="2" x2="3" y2="4">b</points>t</think><answer>x</answer>)") == 0.0);
  CHECK(format_reward("") == 0.0);
}

TEST_CASE("answers_match: soft numeric and normalized text") {
  // |14 - 14.5| / 14.5 = 0.0345 and 0.8 / 14.5 = 0.05517.
  CHECK(answers_match("14", "14.5"));
  CHECK_FALSE(answers_match("13.7", "14.5"));
  CHECK(answers_match("Yes", "yes"));
  CHECK(answers_match("0", "0"));
  CHECK(answers_match("  New   York ", "new york"));
  CHECK_FALSE(answers_match("yes", "no"));
  CHECK(answers_match("50%", "50"));
  CHECK_FALSE(answers_match("50%", "0.5"));
  CHECK(answers_match("1,200", "1200"));
  CHECK(answers_match("1,234.5", "1234.5"));
  CHECK_FALSE(answers_match("12,34", "1234"));
  CHECK(answers_match("+3", "3"));
  CHECK(answers_match(".5", "0.5"));
}

TEST_CASE("answers_match: zero gold uses the absolute tolerance") {
  CHECK(answers_match("0.0", "0"));
  CHECK(answers_match("-0", "0"));
  CHECK_FALSE(answers_match("0.001", "0"));
  CHECK(answers_match("0.001", "0", MatchPolicy{0.05, 0.001}));
  CHECK_FALSE(answers_match("0.0011", "0", MatchPolicy{0.05, 0.001}));
}

TEST_CASE("answers_match: tolerance boundary is inclusive") {
  struct Case {
    const char* gold;
    const char* upper;
    const char* lower;
    const char* above;  // upper + 1e-9 * |gold|
    const char* below;  // lower - 1e-9 * |gold|
  };
  const Case cases[] = {
      {"1", "1.05", "0.95", "1.050000001", "0.949999999"},
      {"10", "10.5", "9.5", "10.50000001", "9.49999999"},
      {"-3", "-3.15", "-2.85", "-3.150000003", "-2.849999997"},
      {"0.02", "0.021", "0.019", "0.02100000002", "0.01899999998"},
  };
  for (const auto& c : cases) {
    CAPTURE(c.gold);
    CHECK(answers_match(c.upper, c.gold));
    CHECK(answers_match(c.lower, c.gold));
    CHECK_FALSE(answers_match(c.above, c.gold));
    CHECK_FALSE(answers_match(c.below, c.gold));
  }
}

TEST_CASE("answers_match is not symmetric") {
  // The tolerance scales with |gold|: 5 <= 0.05 * 100 but 5 > 0.05 * 95.
  CHECK(answers_match("95", "100"));
  CHECK_FALSE(answers_match("100", "95"));
  CHECK(answers_match("105", "100"));
  // 100 against 105 is also inside 5% (5 <= 5.25), so that pair cannot show the asymmetry.
  CHECK(answers_match("100", "105"));
}

TEST_CASE("score") {
  CHECK(score("<think>s</think><answer>7</answer>", "7") == RewardBreakdown{1, 1, 2});
  CHECK(score("junk <answer>7</answer>", "7") == RewardBreakdown{0, 1, 1});
  CHECK(score("", "7") == RewardBreakdown{0, 0, 0});
  CHECK(score("<think>s</think><answer>8</answer>", "7") == RewardBreakdown{1, 0, 1});
}

TEST_CASE("property: score total is the sum of its parts") {
  const std::string_view fragments[] = {"<think>", "</think>", "<answer>", "</answer>",
                                        "<points x0=\"1\" y0=\"2\">", "</points>", "7",
                                        "7.2", " ", "\n", "text", "x1=\"3\"", "yes"};
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> len(0, 12);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(fragments) - 1);
  int accuracy_only = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string raw;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) raw += fragments[pick(rng)];
    const auto r = score(raw, "7");
    CHECK((r.format_reward == 0.0 || r.format_reward == 1.0));
    CHECK((r.accuracy_reward == 0.0 || r.accuracy_reward == 1.0));
    CHECK(r.total == r.format_reward + r.accuracy_reward);
    CHECK(r.format_reward == (parse(raw).fully_valid() ? 1.0 : 0.0));
    accuracy_only += r.format_reward == 0.0 && r.accuracy_reward == 1.0;
  }
  CHECK(accuracy_only > 0);
}

TEST_CASE("property: serialized traces earn the format reward") {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 300; ++i) {
    const auto t = testing::random_trace(rng);
    for (const auto& profile : all_profiles()) {
      const auto raw = serialize(t, profile);
      CHECK(format_reward(raw, profile) == 1.0);
      CHECK(score(raw, t.answer, profile).total == 2.0);
    }
  }
}

TEST_CASE("MatchPolicy validation") {
  CHECK_NOTHROW(MatchPolicy{}.validate());
  CHECK_THROWS(MatchPolicy{1.0, 0.0}.validate());
  CHECK_THROWS(MatchPolicy{-0.1, 0.0}.validate());
  CHECK_THROWS(MatchPolicy{0.05, -1.0}.validate());
}

TEST_CASE("Decimal arithmetic") {
  const auto d = [](std::string_view s) { return *Decimal::parse(s); };
  CHECK(d("1.50") == d("1.5"));
  CHECK(d("-2") < d("1"));
  CHECK((d("1.05") - d("1")).abs() == d("0.05"));
  CHECK(d("0.05") * d("100") == d("5"));
  CHECK(Decimal::from_double(0.05) == d("0.05"));
  CHECK(d("79.275").to_fixed(2) == "79.28");
  CHECK(d("-79.275").to_fixed(2) == "-79.28");
  CHECK(d("3").to_fixed(2) == "3.00");
  CHECK(d("0.004").to_fixed(2) == "0.00");
  CHECK_FALSE(Decimal::parse("1e5"));
  CHECK_FALSE(Decimal::parse("1."));
  CHECK_FALSE(Decimal::parse(""));
}
