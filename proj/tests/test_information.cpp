#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "qcap/channels.hpp"
#include "qcap/information.hpp"
#include "support/oracles.hpp"

namespace qcap {
namespace {

const ComplexMatrix kX{{0.0, 1.0}, {1.0, 0.0}};
const ComplexMatrix kY{{0.0, Complex(0, -1)}, {Complex(0, 1), 0.0}};
const ComplexMatrix kZ{{1.0, 0.0}, {0.0, -1.0}};

KrausChannel fully_depolarizing() {
  return validate_channel({0.5 * ComplexMatrix::identity(2), 0.5 * kX, 0.5 * kY, 0.5 * kZ});
}

using test::reference_information;

std::vector<ComplexMatrix> random_direction(Rng& rng, std::size_t count, std::size_t dim) {
  std::vector<ComplexMatrix> v;
  for (std::size_t i = 0; i < count; ++i) v.push_back(rng.gaussian_matrix(dim, dim));
  return v;
}

// Unit Frobenius norm over the whole factor list; the finite-difference step
// is then measured in the same units as the optimizer's line search.
std::vector<ComplexMatrix> unit(std::vector<ComplexMatrix> v) {
  double sq = 0.0;
  for (const auto& m : v) sq += real_inner_product(m, m);
  for (auto& m : v) m *= 1.0 / std::sqrt(sq);
  return v;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

TEST(JointDistribution, OrthogonalProjectors) {
  const auto ch = channels::identity(2);
  const Ensemble ens({ComplexMatrix::diagonal({std::sqrt(0.5), 0.0}),
                      ComplexMatrix::diagonal({0.0, std::sqrt(0.5)})});
  const Povm povm({ComplexMatrix::diagonal({1.0, 0.0}), ComplexMatrix::diagonal({0.0, 1.0})});
  const auto d = joint_distribution(ch, ens, povm);
  EXPECT_NEAR(d.p(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(d.p(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(d.p(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(d.p(1, 1), 0.5, 1e-15);
  EXPECT_NEAR(mutual_information(d), 1.0, 1e-15);
}

TEST(JointDistribution, SingleOutcomeGivesPriors) {
  Rng rng(3);
  const auto ch = channels::random(3, 2, 2, 5);
  const auto ens = random_ensemble(4, 3, rng);
  const auto d = joint_distribution(ch, ens, random_povm(1, 2, rng));
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(d.p(static_cast<Eigen::Index>(j), 0), trace(ens.state(j)).real(), 1e-12);
  }
  EXPECT_NEAR(mutual_information(d), 0.0, 1e-12);
}

TEST(JointDistribution, FullyDepolarizingIsProductForm) {
  Rng rng(4);
  const auto ens = random_ensemble(3, 2, rng);
  const auto povm = random_povm(4, 2, rng);
  const auto d = joint_distribution(fully_depolarizing(), ens, povm);
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double expected = trace(ens.state(j)).real() * trace(povm.outcome(k)).real() / 2.0;
      EXPECT_NEAR(d.p(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)), expected,
                  1e-15);
    }
  }
}

TEST(JointDistribution, DimensionMismatch) {
  Rng rng(1);
  EXPECT_THROW(joint_distribution(channels::identity(2), random_ensemble(2, 3, rng),
                                  random_povm(2, 2, rng)),
               DimensionMismatch);
  EXPECT_THROW(joint_distribution(channels::identity(2), random_ensemble(2, 2, rng),
                                  random_povm(2, 3, rng)),
               DimensionMismatch);
}

TEST(MutualInformation, Examples) {
  Eigen::MatrixXd diag(2, 2);
  diag << 0.5, 0.0, 0.0, 0.5;
  EXPECT_DOUBLE_EQ(mutual_information(diag), 1.0);

  Eigen::MatrixXd product(2, 3);
  const double a[2] = {0.3, 0.7}, b[3] = {0.2, 0.5, 0.3};
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 3; ++k) product(j, k) = a[j] * b[k];
  EXPECT_NEAR(mutual_information(product), 0.0, 1e-15);

  Eigen::MatrixXd bsc(2, 2);
  bsc << 0.4, 0.1, 0.1, 0.4;
  const double direct = test::mutual_information_sum({{0.4, 0.1}, {0.1, 0.4}});
  EXPECT_NEAR(direct, 1.0 - test::binary_entropy(0.2), 1e-15);
  EXPECT_NEAR(mutual_information(bsc), direct, 1e-15);
  EXPECT_NEAR(mutual_information(bsc), 0.278071905112638, 1e-12);
}

// Bounds, permutation invariance, and Σ_k p_jk = tr ρ_j on random instances.
TEST(MutualInformation, RandomInstanceProperties) {
  Rng rng(21);
  std::uint64_t seed = 1;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rep % 4, dd = 1 + (rep / 4) % 4;
    const std::size_t m = (n + dd - 1) / dd + rep % 2;
    const std::size_t j = 1 + rep % 6, k = 1 + (rep / 6) % 6;
    const auto ch = channels::random(n, dd, m, seed++);
    const auto ens = random_ensemble(j, n, rng);
    const auto povm = random_povm(k, dd, rng);
    const auto d = joint_distribution(ch, ens, povm);
    const double info = mutual_information(d);
    EXPECT_GE(info, -1e-10);
    EXPECT_LE(info, std::min(std::log2(double(j)), std::log2(double(k))) + 1e-10);
    EXPECT_NEAR(d.p.sum(), 1.0, 1e-10);
    for (std::size_t r = 0; r < j; ++r) {
      EXPECT_NEAR(d.row_marginals(Eigen::Index(r)), trace(ens.state(r)).real(), 1e-12);
    }
    EXPECT_NEAR(info, reference_information(ch, ens, povm), 1e-12);

    Eigen::MatrixXd permuted = d.p.colwise().reverse().rowwise().reverse();
    EXPECT_NEAR(mutual_information(permuted), info, 1e-12);
  }
}

TEST(AscentDirections, VanishForProductDistribution) {
  Rng rng(6);
  const auto ch = fully_depolarizing();
  const auto ens = random_ensemble(3, 2, rng);
  const auto povm = random_povm(3, 2, rng);
  const auto d = joint_distribution(ch, ens, povm);
  for (const auto& g : povm_ascent_direction(ch, ens, povm, d)) EXPECT_LT(frobenius_norm(g), 1e-10);
  for (const auto& h : ensemble_ascent_direction(ch, ens, povm, d)) {
    EXPECT_LT(frobenius_norm(h), 1e-10);
  }
}

TEST(AscentDirections, StationaryAtIdentityChannelOptimum) {
  const auto ch = channels::identity(2);
  const Ensemble ens({ComplexMatrix::diagonal({std::sqrt(0.5), 0.0}),
                      ComplexMatrix::diagonal({0.0, std::sqrt(0.5)})});
  const Povm povm({ComplexMatrix::diagonal({1.0, 0.0}), ComplexMatrix::diagonal({0.0, 1.0})});
  const auto d = joint_distribution(ch, ens, povm);
  Rng rng(7);
  const auto g = povm_ascent_direction(ch, ens, povm, d);
  const auto h = ensemble_ascent_direction(ch, ens, povm, d);
  EXPECT_NEAR(povm_directional_derivative(povm, d, g), 0.0, 1e-8);
  EXPECT_NEAR(ensemble_directional_derivative(ch, ens, povm, d, h), 0.0, 1e-8);
  for (int rep = 0; rep < 5; ++rep) {
    EXPECT_NEAR(povm_directional_derivative(povm, d, random_direction(rng, 2, 2)), 0.0, 1e-8);
    EXPECT_NEAR(ensemble_directional_derivative(ch, ens, povm, d, random_direction(rng, 2, 2)),
                0.0, 1e-8);
  }
}

TEST(AscentDirections, SingleStateHasZeroDerivative) {
  Rng rng(8);
  const auto ch = channels::random(2, 2, 2, 3);
  const auto ens = random_ensemble(1, 2, rng);
  const auto povm = random_povm(3, 2, rng);
  const auto d = joint_distribution(ch, ens, povm);
  const auto h = ensemble_ascent_direction(ch, ens, povm, d);
  EXPECT_NEAR(ensemble_directional_derivative(ch, ens, povm, d, h), 0.0, 1e-12);
  EXPECT_NEAR(povm_directional_derivative(povm, d, povm_ascent_direction(povm, d)), 0.0, 1e-12);
}

// Along the ascent direction the relative error bound is strict. Random
// directions can have derivatives near zero, where a central difference with
// h = 1e-6 is dominated by roundoff in f (about 1e-15 / h), so those also get
// an absolute allowance of that size.
void expect_matches_fd(double analytic, double fd, bool ascent, const char* what, int rep) {
  if (ascent) {
    EXPECT_LT(relative_error(analytic, fd), 1e-5) << what << " ascent, rep " << rep;
  } else {
    constexpr double kRoundoff = 64.0 * std::numeric_limits<double>::epsilon() / 1e-6;
    EXPECT_LE(std::abs(analytic - fd), 1e-5 * std::abs(analytic) + kRoundoff)
        << what << " random direction, rep " << rep;
  }
}

// Analytic directional derivatives of the renormalized objective against
// central differences of the objective recomputed from primitives.
TEST(AscentDirections, MatchFiniteDifferences) {
  Rng rng(2024);
  std::uint64_t seed = 500;
  int checked = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n = 2 + rep % 2, dd = 2 + (rep / 2) % 2;
    const std::size_t j = 2 + rep % 3, k = 2 + rep % 4;
    const auto ch = channels::random(n, dd, 2, seed++);
    const auto ens = random_ensemble(j, n, rng);
    const auto povm = random_povm(k, dd, rng);
    const auto d = joint_distribution(ch, ens, povm);
    if (d.p.minCoeff() <= 1e-9) continue;
    ++checked;

    const auto g = unit(povm_ascent_direction(ch, ens, povm, d));
    const auto vp = unit(random_direction(rng, k, dd));
    for (const auto* dir : {&g, &vp}) {
      const double analytic = povm_directional_derivative(povm, d, *dir);
      const double fd = test::central_difference(
          [&](double eps) { return reference_information(ch, ens, povm.stepped(*dir, eps)); },
          1e-6);
      expect_matches_fd(analytic, fd, dir == &g, "povm", rep);
    }
    EXPECT_GE(povm_directional_derivative(povm, d, g), 0.0);

    const auto h = unit(ensemble_ascent_direction(ch, ens, povm, d));
    const auto ve = unit(random_direction(rng, j, n));
    for (const auto* dir : {&h, &ve}) {
      const double analytic = ensemble_directional_derivative(ch, ens, povm, d, *dir);
      const double fd = test::central_difference(
          [&](double eps) { return reference_information(ch, ens.stepped(*dir, eps), povm); },
          1e-6);
      expect_matches_fd(analytic, fd, dir == &h, "ensemble", rep);
    }
    EXPECT_GE(ensemble_directional_derivative(ch, ens, povm, d, h), 0.0);
  }
  EXPECT_GT(checked, 40);
}

}  // namespace
}  // namespace qcap
