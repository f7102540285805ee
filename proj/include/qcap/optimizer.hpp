#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qcap/channel.hpp"
#include "qcap/errors.hpp"
#include "qcap/information.hpp"
#include "qcap/line_search.hpp"
#include "qcap/matrix.hpp"
#include "qcap/random.hpp"

namespace qcap {

struct OptimizerConfig {
  std::size_t num_states = 2;    // J
  std::size_t num_outcomes = 2;  // K, initial
  double sa_percent = 50.0;
  double tolerance = 1e-10;
  double machine_epsilon = std::numeric_limits<double>::epsilon();
  int max_iterations = 10000;
  std::uint64_t seed = 0;
  int restarts = 1;
  double merge_tolerance = 1e-8;
  double prune_threshold = 1e-10;
  bool optimize_ensemble = true;
  LineSearchConfig line_search{};

  void validate() const {
    if (!(sa_percent >= 0.0 && sa_percent <= 100.0)) {
      throw Error("sa_percent must lie in [0, 100]");
    }
    if (!(tolerance > 0.0)) throw Error("tolerance must be positive");
    if (!(machine_epsilon >= 0.0)) throw Error("machine_epsilon must be non-negative");
    if (max_iterations < 1) throw Error("max_iterations must be at least 1");
    if (restarts < 1) throw Error("restarts must be at least 1");
    if (num_states < 1 || num_outcomes < 1) throw Error("J and K must be at least 1");
    if (!(merge_tolerance >= 0.0 && prune_threshold >= 0.0)) {
      throw Error("merge and prune thresholds must be non-negative");
    }
    line_search.validate();
  }
};

enum class Method { SteepestAscent, ConjugateGradient };

inline const char* to_string(Method m) {
  return m == Method::SteepestAscent ? "SA" : "CG";
}

struct IterationRecord {
  int index = 0;
  double mutual_information = 0.0;
  Method method = Method::SteepestAscent;
};

struct RunReport {
  OptimizerConfig config;  // seed is the seed of this run
  std::vector<ComplexMatrix> kraus_ops;
  Ensemble initial_ensemble;
  Ensemble final_ensemble;
  Povm final_povm;
  Povm reduced_povm;
  std::vector<IterationRecord> trace;
  double final_ai = 0.0;
  double reduced_ai = 0.0;
  bool converged = false;
};

// Optional starting point; absent parts are drawn at random (ensemble first).
struct InitialPoint {
  std::optional<Ensemble> ensemble;
  std::optional<Povm> povm;
};

struct IterationSnapshot {
  const IterationRecord& record;
  const Ensemble& ensemble;
  const Povm& povm;
};

using IterationObserver = std::function<void(const IterationSnapshot&)>;

// Relative-change stopping rule: 2 (cur − prev) <= tol (cur + prev) + eps.
inline bool should_stop(double previous, double current, double tolerance,
                        double machine_epsilon) {
  return 2.0 * (current - previous) <= tolerance * (current + previous) + machine_epsilon;
}

// Real flattening of a factor list, (Re, Im) interleaved per entry.
inline Eigen::VectorXd flatten(const std::vector<ComplexMatrix>& factors) {
  Eigen::Index n = 0;
  for (const auto& f : factors) n += 2 * f.eigen().size();
  Eigen::VectorXd out(n);
  Eigen::Index pos = 0;
  for (const auto& f : factors) {
    for (std::size_t i = 0; i < f.rows(); ++i) {
      for (std::size_t j = 0; j < f.cols(); ++j) {
        out(pos++) = f(i, j).real();
        out(pos++) = f(i, j).imag();
      }
    }
  }
  return out;
}

inline std::vector<ComplexMatrix> unflatten(const Eigen::VectorXd& v,
                                            const std::vector<ComplexMatrix>& like) {
  std::vector<ComplexMatrix> out;
  out.reserve(like.size());
  Eigen::Index pos = 0;
  for (const auto& f : like) {
    ComplexMatrix m(f.rows(), f.cols());
    for (std::size_t i = 0; i < f.rows(); ++i) {
      for (std::size_t j = 0; j < f.cols(); ++j) {
        m(i, j) = Complex(v(pos), v(pos + 1));
        pos += 2;
      }
    }
    out.push_back(std::move(m));
  }
  if (pos != v.size()) throw DimensionMismatch("flattened vector length does not match shapes");
  return out;
}

struct ConjugateDirection {
  Eigen::VectorXd direction;
  double beta = 0.0;
};

// Polak-Ribière update with the non-negativity clamp.
inline ConjugateDirection polak_ribiere_direction(const Eigen::VectorXd& previous_gradient,
                                                  const Eigen::VectorXd& current_gradient,
                                                  const Eigen::VectorXd& previous_direction) {
  if (previous_gradient.size() != current_gradient.size() ||
      previous_direction.size() != current_gradient.size()) {
    throw DimensionMismatch("conjugate-gradient vectors differ in length");
  }
  const double denom = previous_gradient.squaredNorm();
  if (!(denom > 0.0)) return {current_gradient, 0.0};
  const double beta =
      std::max(0.0, (current_gradient - previous_gradient).dot(current_gradient) / denom);
  if (!(beta > 0.0) || !std::isfinite(beta)) return {current_gradient, 0.0};
  return {current_gradient + beta * previous_direction, beta};
}

// CG history for one sub-step. Resets on shape change, on β = 0, and every
// `length` conjugate steps.
class ConjugateGradientState {
public:
  Eigen::VectorXd next_direction(const Eigen::VectorXd& gradient, bool conjugate) {
    Eigen::VectorXd direction;
    const bool fresh = previous_gradient_.size() != gradient.size() ||
                       steps_since_reset_ >= static_cast<std::size_t>(gradient.size());
    if (!conjugate || fresh) {
      direction = gradient;
      steps_since_reset_ = 0;
    } else {
      auto cd = polak_ribiere_direction(previous_gradient_, gradient, previous_direction_);
      if (cd.beta == 0.0) steps_since_reset_ = 0;
      direction = std::move(cd.direction);
    }
    previous_gradient_ = gradient;
    previous_direction_ = direction;
    ++steps_since_reset_;
    return direction;
  }

  // Replaces the last direction by the gradient (used when it fails to ascend).
  void restart_with(const Eigen::VectorXd& gradient) {
    previous_direction_ = gradient;
    steps_since_reset_ = 1;
  }

  void reset() {
    previous_gradient_.resize(0);
    previous_direction_.resize(0);
    steps_since_reset_ = 0;
  }

private:
  Eigen::VectorXd previous_gradient_;
  Eigen::VectorXd previous_direction_;
  std::size_t steps_since_reset_ = 0;
};

// Merges outcome pairs with proportional statistics (p_jk1 p_.k2 = p_.k1 p_jk2
// for every j, within merge_tolerance), then drops outcomes with trace below
// prune_threshold and renormalizes.
inline Povm reduce_povm(const Povm& povm, const JointDistribution& d, double merge_tolerance,
                        double prune_threshold = 1e-10) {
  if (d.num_outcomes() != povm.size()) throw DimensionMismatch("POVM/distribution outcome count");
  std::vector<ComplexMatrix> factors = povm.factors();
  std::vector<ComplexMatrix> outcomes = povm.outcomes();
  Eigen::MatrixXd p = d.p;

  auto mergeable = [&](Eigen::Index k1, Eigen::Index k2) {
    const double c1 = p.col(k1).sum();
    const double c2 = p.col(k2).sum();
    for (Eigen::Index j = 0; j < p.rows(); ++j) {
      if (std::abs(p(j, k1) * c2 - c1 * p(j, k2)) > merge_tolerance) return false;
    }
    return true;
  };

  // Scan k1 < k2 ascending; restart the scan after every merge.
  bool merged = true;
  while (merged && outcomes.size() > 1) {
    merged = false;
    const auto k = static_cast<Eigen::Index>(outcomes.size());
    for (Eigen::Index k1 = 0; k1 < k && !merged; ++k1) {
      for (Eigen::Index k2 = k1 + 1; k2 < k && !merged; ++k2) {
        if (!mergeable(k1, k2)) continue;
        const auto i1 = static_cast<std::size_t>(k1);
        const auto i2 = static_cast<std::size_t>(k2);
        outcomes[i1] = hermitian_part(outcomes[i1] + outcomes[i2]);
        factors[i1] = sqrt_psd(outcomes[i1]);
        outcomes.erase(outcomes.begin() + k2);
        factors.erase(factors.begin() + k2);
        p.col(k1) += p.col(k2);
        Eigen::MatrixXd q(p.rows(), p.cols() - 1);
        q.leftCols(k2) = p.leftCols(k2);
        q.rightCols(p.cols() - k2 - 1) = p.rightCols(p.cols() - k2 - 1);
        p = std::move(q);
        merged = true;
      }
    }
  }

  std::vector<ComplexMatrix> kept;
  kept.reserve(factors.size());
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (factors.size() > 1 && trace(outcomes[k]).real() < prune_threshold) continue;
    kept.push_back(std::move(factors[k]));
  }
  if (kept.size() != outcomes.size()) return Povm::normalized(std::move(kept));
  return Povm(std::move(kept));
}

namespace detail {

// Objective value assigned to trial steps where renormalization breaks down.
inline constexpr double kInfeasibleObjective = -1.0;

// Applies a step whose renormalization may break down; empty on failure.
template <class Step>
auto guarded_step(Step&& step) -> std::optional<decltype(step())> {
  try {
    return step();
  } catch (const SingularNormalization&) {
    return std::nullopt;
  } catch (const ConstraintViolation&) {
    return std::nullopt;
  }
}

// Joint table along an ensemble line B_j + s H_j after trace rescaling.
// Each entry is a ratio of quadratics in s, so probes cost O(J K).
class EnsembleLine {
public:
  EnsembleLine(const Ensemble& ensemble, const std::vector<ComplexMatrix>& direction,
               const std::vector<ComplexMatrix>& effects) {
    const auto j_count = static_cast<Eigen::Index>(ensemble.size());
    const auto k_count = static_cast<Eigen::Index>(effects.size());
    a_.resize(j_count, k_count);
    b_.resize(j_count, k_count);
    c_.resize(j_count, k_count);
    for (Eigen::Index j = 0; j < j_count; ++j) {
      const auto& bj = ensemble.factors()[static_cast<std::size_t>(j)];
      const auto& hj = direction[static_cast<std::size_t>(j)];
      const ComplexMatrix x0 = detail::gram(bj);
      const ComplexMatrix cross = adjoint(bj) * hj;
      const ComplexMatrix x1 = cross + adjoint(cross);
      const ComplexMatrix x2 = detail::gram(hj);
      for (Eigen::Index k = 0; k < k_count; ++k) {
        const auto& e = effects[static_cast<std::size_t>(k)];
        a_(j, k) = real_inner_product(x0, e);
        b_(j, k) = real_inner_product(x1, e);
        c_(j, k) = real_inner_product(x2, e);
      }
      t0_ += real_inner_product(bj, bj);
      t1_ += 2.0 * real_inner_product(bj, hj);
      t2_ += real_inner_product(hj, hj);
    }
  }

  double operator()(double s) const {
    const double t = t0_ + s * (t1_ + s * t2_);
    if (!(t > 0.0) || !std::isfinite(t)) return kInfeasibleObjective;
    Eigen::MatrixXd table = (a_ + s * (b_ + s * c_)) / t;
    return mutual_information(table.cwiseMax(0.0));
  }

private:
  Eigen::MatrixXd a_, b_, c_;
  double t0_ = 0.0, t1_ = 0.0, t2_ = 0.0;
};

// Joint table along a POVM line A_k + s G_k followed by S^{-1/2}
// renormalization. The quadratic parts are precomputed; a probe costs one
// eigendecomposition of S(s) plus J congruences.
class PovmLine {
public:
  PovmLine(const Povm& povm, const std::vector<ComplexMatrix>& direction,
           const std::vector<ComplexMatrix>& propagated)
      : propagated_(&propagated) {
    const auto d = povm.dim();
    s0_ = s1_ = s2_ = ComplexMatrix(d, d);
    for (std::size_t k = 0; k < povm.size(); ++k) {
      const auto& a = povm.factors()[k];
      const auto& g = direction[k];
      const ComplexMatrix cross = adjoint(a) * g;
      q0_.push_back(detail::gram(a));
      q1_.push_back(cross + adjoint(cross));
      q2_.push_back(detail::gram(g));
      s0_ += q0_.back();
      s1_ += q1_.back();
      s2_ += q2_.back();
    }
  }

  double operator()(double s) const {
    const ComplexMatrix sm = hermitian_part(s0_ + s * (s1_ + s * s2_));
    const auto eig = hermitian_eigendecomposition(sm);
    if (!(eig.eigenvalues.front() > kDefaultEigenFloor)) return kInfeasibleObjective;
    const auto w = hermitian_function(eig, [](double l) { return 1.0 / std::sqrt(l); });
    const auto& states = *propagated_;
    Eigen::MatrixXd table(static_cast<Eigen::Index>(states.size()),
                          static_cast<Eigen::Index>(q0_.size()));
    for (std::size_t j = 0; j < states.size(); ++j) {
      const ComplexMatrix sigma = w * states[j] * w;
      for (std::size_t k = 0; k < q0_.size(); ++k) {
        table(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
            real_inner_product(sigma, q0_[k]) +
            s * (real_inner_product(sigma, q1_[k]) + s * real_inner_product(sigma, q2_[k]));
      }
    }
    return mutual_information(table.cwiseMax(0.0));
  }

private:
  const std::vector<ComplexMatrix>* propagated_;
  std::vector<ComplexMatrix> q0_, q1_, q2_;
  ComplexMatrix s0_, s1_, s2_;
};

inline std::vector<ComplexMatrix> scaled(std::vector<ComplexMatrix> v, double s) {
  for (auto& m : v) m *= s;
  return v;
}

}  // namespace detail

inline RunReport optimize(const KrausChannel& ch, const OptimizerConfig& config,
                          const InitialPoint& initial = {},
                          const IterationObserver& observer = {}) {
  config.validate();
  Rng rng(config.seed);
  Ensemble ensemble = initial.ensemble
                          ? *initial.ensemble
                          : random_ensemble(config.num_states, ch.input_dim(), rng);
  Povm povm =
      initial.povm ? *initial.povm : random_povm(config.num_outcomes, ch.output_dim(), rng);
  if (ensemble.dim() != ch.input_dim() || povm.dim() != ch.output_dim()) {
    throw DimensionMismatch("initial point does not match channel dimensions");
  }
  const Ensemble initial_ensemble = ensemble;

  std::vector<ComplexMatrix> propagated = propagate(ch, ensemble);
  JointDistribution dist = joint_distribution(propagated, povm);
  double current = mutual_information(dist);

  std::vector<IterationRecord> trace;
  bool converged = false;

  auto notify = [&] {
    if (observer) observer(IterationSnapshot{trace.back(), ensemble, povm});
  };

  if (ensemble.size() == 1 || povm.size() == 1) {
    trace.push_back({1, current, Method::SteepestAscent});
    converged = true;
    notify();
  } else {
    // Gains below the rounding noise of the J*K-term objective sum are not
    // taken; otherwise normalized roundoff-level gradients chase noise.
    const double resolution =
        static_cast<double>(ensemble.size() * povm.size()) * config.machine_epsilon;
    ConjugateGradientState povm_cg;
    ConjugateGradientState ensemble_cg;
    for (int it = 1; it <= config.max_iterations; ++it) {
      const double previous = current;
      const Method method = rng.uniform() < config.sa_percent / 100.0
                                ? Method::SteepestAscent
                                : Method::ConjugateGradient;
      const bool conjugate = method == Method::ConjugateGradient;

      // POVM sub-step.
      {
        const auto gradient = povm_ascent_direction(povm, dist);
        const Eigen::VectorXd g = flatten(gradient);
        Eigen::VectorXd dv = povm_cg.next_direction(g, conjugate);
        auto direction = unflatten(dv, gradient);
        if (conjugate && !(povm_directional_derivative(povm, dist, direction) > 0.0)) {
          povm_cg.restart_with(g);
          dv = g;
          direction = gradient;
        }
        const double norm = dv.norm();
        if (norm > 0.0 && std::isfinite(norm)) {
          direction = detail::scaled(std::move(direction), 1.0 / norm);
          const detail::PovmLine objective(povm, direction, propagated);
          const auto res = line_search_max(objective, config.line_search);
          if (res.step > 0.0 && res.value > current + resolution) {
            auto moved = detail::guarded_step([&] { return povm.stepped(direction, res.step); });
            if (moved) {
              auto moved_dist = joint_distribution(propagated, *moved);
              const double moved_value = mutual_information(moved_dist);
              if (moved_value > current + resolution) {
                povm = std::move(*moved);
                dist = std::move(moved_dist);
                current = moved_value;
              }
            }
          }
        }
      }

      // Ensemble sub-step.
      if (config.optimize_ensemble) {
        const auto effects = pull_back_effects(ch, povm);
        const auto gradient =
            detail::right_multiply(ensemble.factors(), detail::ensemble_kernels(effects, dist));
        const Eigen::VectorXd g = flatten(gradient);
        Eigen::VectorXd dv = ensemble_cg.next_direction(g, conjugate);
        auto direction = unflatten(dv, gradient);
        if (conjugate &&
            !(ensemble_directional_derivative(ch, ensemble, povm, dist, direction) > 0.0)) {
          ensemble_cg.restart_with(g);
          dv = g;
          direction = gradient;
        }
        const double norm = dv.norm();
        if (norm > 0.0 && std::isfinite(norm)) {
          direction = detail::scaled(std::move(direction), 1.0 / norm);
          const detail::EnsembleLine objective(ensemble, direction, effects);
          const auto res = line_search_max(objective, config.line_search);
          if (res.step > 0.0 && res.value > current + resolution) {
            Ensemble moved = ensemble.stepped(direction, res.step);
            auto moved_propagated = propagate(ch, moved);
            auto moved_dist = joint_distribution(moved_propagated, povm);
            const double moved_value = mutual_information(moved_dist);
            // The two evaluation routes differ by rounding only; keep the
            // trace monotone regardless.
            if (moved_value > current + resolution) {
              ensemble = std::move(moved);
              propagated = std::move(moved_propagated);
              dist = std::move(moved_dist);
              current = moved_value;
            }
          }
        }
      }

      trace.push_back({it, current, method});
      notify();
      if (should_stop(previous, current, config.tolerance, config.machine_epsilon)) {
        converged = true;
        break;
      }
    }
  }

  Povm reduced = reduce_povm(povm, dist, config.merge_tolerance, config.prune_threshold);
  const double reduced_ai = mutual_information(joint_distribution(propagated, reduced));

  return RunReport{config,        ch.kraus_ops(), initial_ensemble, std::move(ensemble),
                   std::move(povm), std::move(reduced), std::move(trace),  current,
                   reduced_ai,    converged};
}

// Worker count from QCAP_THREADS, else hardware concurrency.
inline unsigned default_worker_count() {
  if (const char* env = std::getenv("QCAP_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs `config.restarts` independent optimizations with seeds seed, seed+1,
// ... and returns the best. Ties within 1e-12 go to the lowest seed.
inline RunReport multi_restart(const KrausChannel& ch, const OptimizerConfig& config,
                               const InitialPoint& initial = {}, unsigned workers = 0) {
  config.validate();
  const auto n = static_cast<std::size_t>(config.restarts);
  std::vector<std::optional<RunReport>> results(n);
  std::vector<std::exception_ptr> errors(n);

  auto run_one = [&](std::size_t i) {
    OptimizerConfig c = config;
    c.seed = config.seed + i;
    c.restarts = 1;
    try {
      results[i] = optimize(ch, c, initial);
      results[i]->config.restarts = config.restarts;
    } catch (const NumericalError&) {
      errors[i] = std::current_exception();
    }
  };

  if (workers == 0) workers = default_worker_count();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run_one(i);
      });
    }
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < n; ++i) {
    if (!results[i]) continue;
    if (!best || results[i]->final_ai > results[*best]->final_ai + 1e-12) best = i;
  }
  if (!best) std::rethrow_exception(errors.front());
  return std::move(*results[*best]);
}

}  // namespace qcap
