#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "qcap/line_search.hpp"

namespace qcap {
namespace {

int evaluation_bound(const LineSearchConfig& c, const Bracket& br) {
  const double width = br.c - br.a;
  const double tol = c.golden_tolerance * (std::abs(br.a) + std::abs(br.c)) + 1e-12;
  const double golden_steps = std::max(0.0, std::ceil(std::log(width / tol) / std::log(1.0 / 0.618)));
  return c.max_brackets + static_cast<int>(golden_steps) + 3;
}

TEST(Bracket, UnimodalQuadratic) {
  auto f = [](double x) { return -(x - 0.3) * (x - 0.3); };
  const auto br = bracket_maximum(f);
  EXPECT_LT(br.a, br.b);
  EXPECT_LT(br.b, br.c);
  EXPECT_LE(br.a, 0.3);
  EXPECT_GE(br.c, 0.3);
  EXPECT_GE(br.fb, br.fa);
  EXPECT_GE(br.fb, br.fc);
  EXPECT_FALSE(br.saturated);
}

TEST(Bracket, DecreasingFromZero) {
  auto f = [](double x) { return -x; };
  LineSearchConfig c;
  const auto br = bracket_maximum(f, c);
  EXPECT_EQ(br.a, 0.0);
  EXPECT_EQ(br.b, c.initial_step);
  EXPECT_EQ(br.c, c.initial_step * c.growth_factor);
  const auto res = golden_section_max(f, br, c);
  EXPECT_EQ(res.step, 0.0);
  EXPECT_EQ(res.value, 0.0);
}

TEST(Bracket, SaturatesOnMonotoneIncrease) {
  auto f = [](double x) { return x; };
  const auto br = bracket_maximum(f);
  EXPECT_TRUE(br.saturated);
  LineSearchConfig tight;
  tight.max_step = 1.0;
  EXPECT_TRUE(bracket_maximum(f, tight).saturated);
  EXPECT_LE(bracket_maximum(f, tight).c, 2.0);
}

TEST(Bracket, RejectsNonFinite) {
  auto f = [](double x) { return x > 0.01 ? std::numeric_limits<double>::quiet_NaN() : x; };
  EXPECT_THROW(bracket_maximum(f), NonFiniteObjective);
  LineSearchConfig bad;
  bad.growth_factor = 1.0;
  EXPECT_THROW(bracket_maximum([](double) { return 0.0; }, bad), Error);
}

TEST(GoldenSection, QuadraticAndSine) {
  auto quad = [](double x) { return -(x - 0.3) * (x - 0.3); };
  const auto r1 = line_search_max(quad);
  EXPECT_NEAR(r1.step, 0.3, 1e-5);

  auto sine = [](double x) { return std::sin(x); };
  const auto br = bracket_maximum(sine);
  EXPECT_LT(br.a, std::numbers::pi / 2);
  EXPECT_GT(br.c, std::numbers::pi / 2);
  const auto r2 = golden_section_max(sine, br);
  EXPECT_NEAR(r2.step, std::numbers::pi / 2, 1e-5);
}

TEST(GoldenSection, ConstantFunction) {
  auto f = [](double) { return 2.5; };
  const auto r = line_search_max(f);
  EXPECT_EQ(r.value, 2.5);
  EXPECT_GE(r.step, 0.0);
}

// Never below f(0), and the evaluation count stays within budget, over a
// family of shifted and scaled test functions.
TEST(LineSearch, MonotoneAndBoundedEvaluations) {
  LineSearchConfig c;
  for (double center : {-1.0, 1e-5, 1e-3, 0.7, 50.0, 3e4}) {
    for (double width : {1e-3, 1.0, 100.0}) {
      int count = 0;
      auto f = [&](double x) {
        ++count;
        return std::exp(-((x - center) * (x - center)) / (width * width)) + 0.1 * std::sin(x);
      };
      const double f0 = f(0.0);
      count = 0;
      const auto br = bracket_maximum(f, c);
      const auto res = golden_section_max(f, br, c);
      EXPECT_GE(res.value, f0 - 1e-12);
      EXPECT_EQ(count, br.evaluations + res.evaluations);
      EXPECT_LE(count, evaluation_bound(c, br)) << center << " " << width;
    }
  }
}

}  // namespace
}  // namespace qcap
