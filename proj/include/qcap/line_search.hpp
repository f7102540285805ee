#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "qcap/errors.hpp"

namespace qcap {

struct LineSearchConfig {
  double initial_step = 1e-3;
  double growth_factor = 2.0;
  int max_brackets = 60;
  double golden_tolerance = 1e-6;  // relative to the bracket ends
  double max_step = 1e6;

  void validate() const {
    if (!(initial_step > 0.0 && golden_tolerance > 0.0 && max_step > 0.0 && max_brackets >= 2 &&
          growth_factor > 1.0)) {
      throw Error("invalid line-search configuration");
    }
  }
};

// a < b < c along the step axis, with the objective at each point.
struct Bracket {
  double a = 0.0, b = 0.0, c = 0.0;
  double fa = 0.0, fb = 0.0, fc = 0.0;
  bool saturated = false;  // still rising at max_step or max_brackets
  int evaluations = 0;
};

struct LineSearchResult {
  double step = 0.0;
  double value = 0.0;
  int evaluations = 0;
  bool saturated = false;
};

namespace detail {

template <class Fn>
double probe(Fn& f, double x, int& evaluations) {
  const double v = f(x);
  ++evaluations;
  if (!std::isfinite(v)) {
    throw NonFiniteObjective("line-search objective is not finite at step " + std::to_string(x));
  }
  return v;
}

}  // namespace detail

// Steps outward 0, s, s g, s g^2, ... until the objective stops rising.
template <class Fn>
Bracket bracket_maximum(Fn&& f, const LineSearchConfig& config = {}) {
  config.validate();
  Bracket br;
  br.a = 0.0;
  br.fa = detail::probe(f, 0.0, br.evaluations);
  br.b = config.initial_step;
  br.fb = detail::probe(f, br.b, br.evaluations);
  br.c = br.b * config.growth_factor;
  br.fc = detail::probe(f, br.c, br.evaluations);
  if (!(br.fb > br.fa)) return br;

  int growth_steps = 2;
  while (br.fc > br.fb) {
    if (growth_steps >= config.max_brackets || br.c >= config.max_step) {
      br.saturated = true;
      return br;
    }
    br.a = br.b;
    br.fa = br.fb;
    br.b = br.c;
    br.fb = br.fc;
    br.c = br.b * config.growth_factor;
    br.fc = detail::probe(f, br.c, br.evaluations);
    ++growth_steps;
  }
  return br;
}

// Golden-section reduction of [a, c]. The best point seen, bracket ends
// included, is returned, so the result never falls below the bracket's
// starting value.
template <class Fn>
LineSearchResult golden_section_max(Fn&& f, const Bracket& br, const LineSearchConfig& config = {}) {
  constexpr double kRatio = std::numbers::phi - 1.0;  // 0.618...
  LineSearchResult best{br.a, br.fa, 0, br.saturated};
  auto consider = [&best](double x, double v) {
    if (v > best.value) {
      best.step = x;
      best.value = v;
    }
  };
  consider(br.b, br.fb);
  consider(br.c, br.fc);

  double lo = br.a;
  double hi = br.c;
  const double tol = config.golden_tolerance * (std::abs(lo) + std::abs(hi)) + 1e-12;
  if (hi - lo < tol) return best;

  double x1 = hi - kRatio * (hi - lo);
  double x2 = lo + kRatio * (hi - lo);
  double f1 = detail::probe(f, x1, best.evaluations);
  double f2 = detail::probe(f, x2, best.evaluations);
  consider(x1, f1);
  consider(x2, f2);
  while (hi - lo >= tol) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kRatio * (hi - lo);
      f1 = detail::probe(f, x1, best.evaluations);
      consider(x1, f1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kRatio * (hi - lo);
      f2 = detail::probe(f, x2, best.evaluations);
      consider(x2, f2);
    }
  }
  return best;
}

// Bracket then golden-section. If no probe beats f(0) the step is 0.
template <class Fn>
LineSearchResult line_search_max(Fn&& f, const LineSearchConfig& config = {}) {
  const Bracket br = bracket_maximum(f, config);
  auto result = golden_section_max(f, br, config);
  result.evaluations += br.evaluations;
  return result;
}

}  // namespace qcap
