#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library's objective or gradient code.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "qcap/channel.hpp"

namespace qcap::test {

inline double binary_entropy(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

// Direct double sum over a nested table.
inline double mutual_information_sum(const std::vector<std::vector<double>>& p) {
  std::vector<double> rows(p.size(), 0.0);
  std::vector<double> cols(p.front().size(), 0.0);
  for (std::size_t j = 0; j < p.size(); ++j) {
    for (std::size_t k = 0; k < p[j].size(); ++k) {
      rows[j] += p[j][k];
      cols[k] += p[j][k];
    }
  }
  double total = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    for (std::size_t k = 0; k < p[j].size(); ++k) {
      if (p[j][k] > 0.0) total += p[j][k] * std::log2(p[j][k] / (rows[j] * cols[k]));
    }
  }
  return total;
}

// Grid search over two antipodal pure qubit inputs (prior q, 1 − q) and a
// projective measurement at angle theta to their Bloch axis, for the channel
// that shrinks Bloch vectors by (1 − p). 10 priors x 100 angles.
inline double depolarizing_grid_maximum(double p) {
  double best = 0.0;
  for (int iq = 0; iq < 10; ++iq) {
    const double q = 0.05 * (iq + 1);  // 0.05 ... 0.5; I is symmetric under q -> 1 - q
    for (int it = 0; it < 100; ++it) {
      const double theta = std::numbers::pi * it / 100.0;
      const double c = (1.0 - p) * std::cos(theta);
      const double up_plus = 0.5 * (1.0 + c);   // P(+ | +n)
      const double up_minus = 0.5 * (1.0 - c);  // P(+ | −n)
      const std::vector<std::vector<double>> table{
          {q * up_plus, q * (1.0 - up_plus)},
          {(1.0 - q) * up_minus, (1.0 - q) * (1.0 - up_minus)}};
      best = std::max(best, mutual_information_sum(table));
    }
  }
  return best;
}

// Objective from primitives only: p_jk = Re tr{M(rho_j) Pi_k}.
inline double reference_information(const KrausChannel& ch, const Ensemble& ens,
                                    const Povm& povm) {
  std::vector<std::vector<double>> p(ens.size(), std::vector<double>(povm.size()));
  for (std::size_t j = 0; j < ens.size(); ++j) {
    const auto out = apply_channel(ch, ens.state(j));
    for (std::size_t k = 0; k < povm.size(); ++k) p[j][k] = trace(out * povm.outcome(k)).real();
  }
  return mutual_information_sum(p);
}

inline double central_difference(const std::function<double(double)>& f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

}  // namespace qcap::test
