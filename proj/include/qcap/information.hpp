#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qcap/channel.hpp"
#include "qcap/errors.hpp"
#include "qcap/matrix.hpp"

namespace qcap {

inline constexpr double kNegativeProbabilityTolerance = 1e-12;
// Gradient terms with smaller joint probability are skipped.
inline constexpr double kGradientProbabilityFloor = 1e-15;
inline constexpr double kInvLn2 = 1.0 / std::numbers::ln2;

struct JointDistribution {
  Eigen::MatrixXd p;                // J x K, p(j, k) = tr{ρ'_j Π_k}
  Eigen::VectorXd row_marginals;    // p_j. = tr ρ_j
  Eigen::VectorXd col_marginals;    // p_.k
  std::vector<ComplexMatrix> propagated_states;  // ρ'_j = M(ρ_j)

  std::size_t num_states() const noexcept { return static_cast<std::size_t>(p.rows()); }
  std::size_t num_outcomes() const noexcept { return static_cast<std::size_t>(p.cols()); }
};

// M(ρ_j) for every state of the ensemble.
inline std::vector<ComplexMatrix> propagate(const KrausChannel& ch, const Ensemble& ens) {
  if (ens.dim() != ch.input_dim()) {
    throw DimensionMismatch("ensemble is " + std::to_string(ens.dim()) +
                            "-dimensional, channel input is " + std::to_string(ch.input_dim()));
  }
  std::vector<ComplexMatrix> out;
  out.reserve(ens.size());
  for (const auto& b : ens.factors()) {
    // K ρ K† = (K B†)(K B†)†; the product form keeps ρ' exactly Hermitian PSD.
    const auto d = static_cast<Eigen::Index>(ch.output_dim());
    ComplexMatrix::Storage acc = ComplexMatrix::Storage::Zero(d, d);
    for (const auto& k : ch.kraus_ops()) {
      const ComplexMatrix::Storage kb = k.eigen() * b.eigen().adjoint();
      acc.noalias() += kb * kb.adjoint();
    }
    out.emplace_back(std::move(acc));
  }
  return out;
}

// M†(Π_k) for every outcome.
inline std::vector<ComplexMatrix> pull_back_effects(const KrausChannel& ch, const Povm& povm) {
  if (povm.dim() != ch.output_dim()) {
    throw DimensionMismatch("POVM is " + std::to_string(povm.dim()) +
                            "-dimensional, channel output is " + std::to_string(ch.output_dim()));
  }
  std::vector<ComplexMatrix> out;
  out.reserve(povm.size());
  for (const auto& a : povm.factors()) {
    const auto n = static_cast<Eigen::Index>(ch.input_dim());
    ComplexMatrix::Storage acc = ComplexMatrix::Storage::Zero(n, n);
    for (const auto& k : ch.kraus_ops()) {
      const ComplexMatrix::Storage ak = a.eigen() * k.eigen();
      acc.noalias() += ak.adjoint() * ak;
    }
    out.emplace_back(std::move(acc));
  }
  return out;
}

// table(j, k) = Re tr{states_j effects_k} for Hermitian arguments.
inline Eigen::MatrixXd probability_table(const std::vector<ComplexMatrix>& states,
                                         const std::vector<ComplexMatrix>& effects) {
  Eigen::MatrixXd table(static_cast<Eigen::Index>(states.size()),
                        static_cast<Eigen::Index>(effects.size()));
  for (std::size_t j = 0; j < states.size(); ++j) {
    for (std::size_t k = 0; k < effects.size(); ++k) {
      double v = real_inner_product(states[j], effects[k]);
      if (v < 0.0) {
        if (v < -kNegativeProbabilityTolerance) {
          throw NumericalError("negative joint probability " + std::to_string(v));
        }
        v = 0.0;
      }
      table(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = v;
    }
  }
  return table;
}

inline JointDistribution make_distribution(Eigen::MatrixXd table,
                                           std::vector<ComplexMatrix> propagated = {}) {
  JointDistribution d;
  d.row_marginals = table.rowwise().sum();
  d.col_marginals = table.colwise().sum().transpose();
  d.p = std::move(table);
  d.propagated_states = std::move(propagated);
  return d;
}

inline JointDistribution joint_distribution(std::vector<ComplexMatrix> propagated,
                                            const Povm& povm) {
  if (!propagated.empty() && propagated.front().rows() != povm.dim()) {
    throw DimensionMismatch("propagated states and POVM dimensions differ");
  }
  auto table = probability_table(propagated, povm.outcomes());
  return make_distribution(std::move(table), std::move(propagated));
}

inline JointDistribution joint_distribution(const KrausChannel& ch, const Ensemble& ens,
                                            const Povm& povm) {
  if (povm.dim() != ch.output_dim()) {
    throw DimensionMismatch("POVM is " + std::to_string(povm.dim()) +
                            "-dimensional, channel output is " + std::to_string(ch.output_dim()));
  }
  return joint_distribution(propagate(ch, ens), povm);
}

// Mutual information in bits of a J x K joint probability table.
inline double mutual_information(const Eigen::MatrixXd& p) {
  const Eigen::VectorXd rows = p.rowwise().sum();
  const Eigen::VectorXd cols = p.colwise().sum().transpose();
  double nats = 0.0;
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      const double pjk = p(j, k);
      if (pjk > 0.0) nats += pjk * std::log(pjk / (rows(j) * cols(k)));
    }
  }
  return nats * kInvLn2;
}

inline double mutual_information(const JointDistribution& d) { return mutual_information(d.p); }

namespace detail {

// R_k = (1/ln 2) Σ_j ρ'_j ln(p_jk / (p_j. p_.k)).
inline std::vector<ComplexMatrix> povm_kernels(const JointDistribution& d) {
  if (d.propagated_states.size() != d.num_states()) {
    throw DimensionMismatch("distribution lacks propagated states");
  }
  const auto dim = d.propagated_states.front().rows();
  std::vector<ComplexMatrix> r(d.num_outcomes(), ComplexMatrix(dim, dim));
  for (Eigen::Index k = 0; k < d.p.cols(); ++k) {
    auto& rk = r[static_cast<std::size_t>(k)].eigen();
    for (Eigen::Index j = 0; j < d.p.rows(); ++j) {
      const double pjk = d.p(j, k);
      if (pjk < kGradientProbabilityFloor) continue;
      const double w = std::log(pjk / (d.row_marginals(j) * d.col_marginals(k))) * kInvLn2;
      rk += w * d.propagated_states[static_cast<std::size_t>(j)].eigen();
    }
  }
  return r;
}

// D_j = (1/ln 2) [Σ_k M†(Π_k) ln(p_jk / p_.k) − 1 ln p_j.].
inline std::vector<ComplexMatrix> ensemble_kernels(const std::vector<ComplexMatrix>& effects,
                                                   const JointDistribution& d) {
  const auto dim = effects.front().rows();
  std::vector<ComplexMatrix> out(d.num_states(), ComplexMatrix(dim, dim));
  for (Eigen::Index j = 0; j < d.p.rows(); ++j) {
    auto& dj = out[static_cast<std::size_t>(j)].eigen();
    for (Eigen::Index k = 0; k < d.p.cols(); ++k) {
      const double pjk = d.p(j, k);
      if (pjk < kGradientProbabilityFloor) continue;
      dj += (std::log(pjk / d.col_marginals(k)) * kInvLn2) *
            effects[static_cast<std::size_t>(k)].eigen();
    }
    if (d.row_marginals(j) > 0.0) {
      dj.diagonal().array() -= std::log(d.row_marginals(j)) * kInvLn2;
    }
  }
  return out;
}

inline std::vector<ComplexMatrix> right_multiply(const std::vector<ComplexMatrix>& factors,
                                                 const std::vector<ComplexMatrix>& kernels) {
  std::vector<ComplexMatrix> out;
  out.reserve(factors.size());
  for (std::size_t i = 0; i < factors.size(); ++i) out.push_back(factors[i] * kernels[i]);
  return out;
}

}  // namespace detail

// Ascent direction G_k = A_k R_k for the POVM factors.
inline std::vector<ComplexMatrix> povm_ascent_direction(const Povm& povm,
                                                        const JointDistribution& d) {
  if (povm.size() != d.num_outcomes()) throw DimensionMismatch("POVM/distribution outcome count");
  return detail::right_multiply(povm.factors(), detail::povm_kernels(d));
}

inline std::vector<ComplexMatrix> povm_ascent_direction(const KrausChannel&, const Ensemble&,
                                                        const Povm& povm,
                                                        const JointDistribution& d) {
  return povm_ascent_direction(povm, d);
}

// Ascent direction H_j = B_j D_j for the ensemble factors.
inline std::vector<ComplexMatrix> ensemble_ascent_direction(const KrausChannel& ch,
                                                            const Ensemble& ens, const Povm& povm,
                                                            const JointDistribution& d) {
  if (ens.size() != d.num_states()) throw DimensionMismatch("ensemble/distribution state count");
  return detail::right_multiply(ens.factors(),
                                detail::ensemble_kernels(pull_back_effects(ch, povm), d));
}

// First-order change of I under A_k <- (A_k + ε V_k) S^{-1/2}, at ε = 0.
inline double povm_directional_derivative(const Povm& povm, const JointDistribution& d,
                                          const std::vector<ComplexMatrix>& direction) {
  if (direction.size() != povm.size()) throw DimensionMismatch("POVM direction size");
  const auto kernels = detail::povm_kernels(d);
  const auto dim = static_cast<Eigen::Index>(povm.dim());
  ComplexMatrix::Storage t = ComplexMatrix::Storage::Zero(dim, dim);
  ComplexMatrix::Storage w = ComplexMatrix::Storage::Zero(dim, dim);
  double linear = 0.0;
  for (std::size_t k = 0; k < povm.size(); ++k) {
    const auto& a = povm.factors()[k].eigen();
    const auto& v = direction[k].eigen();
    const auto& r = kernels[k].eigen();
    const ComplexMatrix::Storage av = a.adjoint() * v;
    t += av + av.adjoint();
    const ComplexMatrix::Storage pi = a.adjoint() * a;
    const ComplexMatrix::Storage pr = pi * r;
    w += pr + pr.adjoint();
    linear += 2.0 * (r * av).trace().real();
  }
  return linear - 0.5 * (w * t).trace().real();
}

// First-order change of I under B_j <- (B_j + ε V_j) / sqrt(Σ tr), at ε = 0.
inline double ensemble_directional_derivative(const KrausChannel& ch, const Ensemble& ens,
                                              const Povm& povm, const JointDistribution& d,
                                              const std::vector<ComplexMatrix>& direction) {
  if (direction.size() != ens.size()) throw DimensionMismatch("ensemble direction size");
  const auto kernels = detail::ensemble_kernels(pull_back_effects(ch, povm), d);
  double linear = 0.0;
  double dz = 0.0;
  double weighted = 0.0;
  for (std::size_t j = 0; j < ens.size(); ++j) {
    const auto& b = ens.factors()[j].eigen();
    const auto& v = direction[j].eigen();
    const auto& dj = kernels[j].eigen();
    const ComplexMatrix::Storage bv = b.adjoint() * v;
    linear += 2.0 * (dj * bv).trace().real();
    dz += 2.0 * bv.trace().real();
    weighted += (dj * (b.adjoint() * b)).trace().real();
  }
  return linear - dz * weighted;
}

}  // namespace qcap
