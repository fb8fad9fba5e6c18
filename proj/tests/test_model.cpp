#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mcdm/errors.hpp"
#include "mcdm/model.hpp"
#include "oracles.hpp"

using namespace mcdm;
using oracle::Rng;

namespace {

struct Problem {
  DesignSet design;
  Parameters params;
};

Problem random_problem(Rng& rng) {
  const Index n = oracle::integer(rng, 5, 40);
  const Index p = oracle::integer(rng, 1, 4);
  const int r = static_cast<int>(oracle::integer(rng, 2, 3));
  const TermSet all = saturated_terms(r, 2);
  TermSet z{all.begin(), all.begin() + oracle::integer(rng, 1, static_cast<Index>(all.size()))};
  Problem out{DesignSet::from_profiles(oracle::gaussian(rng, n, p), {}, ProfileCoding(r), z, all), {}};
  const Index rank = oracle::integer(rng, 1, std::min<Index>(p, static_cast<Index>(z.size())));
  out.params.bw = oracle::gaussian(rng, static_cast<Index>(all.size()), 1);
  out.params.bx = oracle::gaussian(rng, p, rank);
  out.params.bz = oracle::gaussian(rng, static_cast<Index>(z.size()), rank);
  return out;
}

}  // namespace

TEST_CASE("linear predictor matches the elementwise definition") {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const auto pr = random_problem(rng);
    const MatrixXd theta = linear_predictor(pr.params, pr.design);
    const MatrixXd ref = oracle::theta_elementwise(pr.params, pr.design.x, pr.design.z, pr.design.w);
    CHECK((theta - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((intercepts(pr.params, pr.design) - pr.design.w * pr.params.bw).norm() < 1e-12);
  }
}

TEST_CASE("linear predictor checks shapes") {
  Rng rng(22);
  auto pr = random_problem(rng);
  pr.params.bz = MatrixXd::Zero(pr.params.bz.rows() + 1, pr.params.bz.cols());
  CHECK_THROWS_AS(linear_predictor(pr.params, pr.design), DimensionMismatch);
}

TEST_CASE("probabilities are a stable softmax") {
  MatrixXd theta(3, 3);
  theta << 0, 0, 0, 1000, 999, 0, -800, -800, -801;
  const MatrixXd pi = probabilities(theta);
  CHECK(pi.allFinite());
  CHECK((pi.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK(pi(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(pi(1, 0) / pi(1, 1) == doctest::Approx(std::exp(1.0)));
  const MatrixXd lp = log_probabilities(theta);
  CHECK(lp(2, 2) == doctest::Approx(std::log(pi(2, 2))));
}

TEST_CASE("deviance is -2 sum log pi of the observed cells") {
  Rng rng(23);
  const MatrixXd theta = oracle::gaussian(rng, 10, 4);
  const MatrixXd pi = probabilities(theta);
  const Observations g = oracle::sample(rng, pi);
  double ref = 0.0;
  for (Index i = 0; i < 10; ++i) ref -= 2.0 * std::log(pi(i, g[i]));
  CHECK(deviance(g, pi) == doctest::Approx(ref).epsilon(1e-13));
  CHECK(deviance_from_theta(g, theta) == doctest::Approx(ref).epsilon(1e-13));

  MatrixXd tiny = MatrixXd::Constant(10, 4, 0.25);
  tiny(0, g[0]) = 0.0;
  CHECK_THROWS_AS(deviance(g, tiny), ProbabilityUnderflow);
  CHECK_THROWS_AS(deviance(g, MatrixXd::Constant(9, 4, 0.25)), DimensionMismatch);
}

TEST_CASE("row gradient is -(g - pi)") {
  Rng rng(24);
  for (int trial = 0; trial < 200; ++trial) {
    const Index k = oracle::integer(rng, 2, 10);
    const VectorXd theta = oracle::gaussian(rng, k, 1, 2.0);
    const Index c = oracle::integer(rng, 0, k - 1);
    VectorXd analytic = oracle::softmax(theta);
    analytic(c) -= 1.0;  // -(g - pi)
    for (Index j = 0; j < k; ++j) {
      const double h = 1e-5;
      VectorXd up = theta, dn = theta;
      up(j) += h;
      dn(j) -= h;
      const double fd = (oracle::row_loss(up, c) - oracle::row_loss(dn, c)) / (2 * h);
      CHECK(std::abs(fd - analytic(j)) <= 1e-6 * std::max(1e-3, std::abs(analytic(j))));
    }
  }
}

TEST_CASE("multinomial curvature is bounded by one half") {
  Rng rng(25);
  for (int trial = 0; trial < 500; ++trial) {
    const Index k = oracle::integer(rng, 2, 10);
    const VectorXd pi = oracle::random_simplex(rng, k);
    const MatrixXd hess = MatrixXd(pi.asDiagonal()) - pi * pi.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * MatrixXd::Identity(k, k) - hess);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
  }
  // A quarter is not enough: two equally likely categories give curvature 1/2.
  const VectorXd half = VectorXd::Constant(2, 0.5);
  const MatrixXd hess = MatrixXd(half.asDiagonal()) - half * half.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.25 * MatrixXd::Identity(2, 2) - hess);
  CHECK(eig.eigenvalues().minCoeff() == doctest::Approx(-0.25));
}

TEST_CASE("identify picks the canonical member of the orbit") {
  Rng rng(26);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pr = random_problem(rng);
    const Parameters id = identify(pr.params, pr.design);
    const Index s = id.rank();
    CHECK((linear_predictor(id, pr.design) - linear_predictor(pr.params, pr.design)).cwiseAbs().maxCoeff() < 1e-9);
    const MatrixXd v = pr.design.z * id.bz;
    const MatrixXd u = pr.design.x * id.bx;
    CHECK((v.transpose() * v - MatrixXd::Identity(s, s)).cwiseAbs().maxCoeff() < 1e-9);
    const MatrixXd utu = u.transpose() * u;
    for (Index a = 0; a < s; ++a) {
      for (Index b = 0; b < s; ++b) {
        if (a != b) CHECK(std::abs(utu(a, b)) < 1e-8 * utu.diagonal().maxCoeff());
      }
      if (a > 0) CHECK(utu(a - 1, a - 1) >= utu(a, a) * (1 - 1e-12));
      // first clearly nonzero entry of each V column is positive
      const double scale = v.col(a).cwiseAbs().maxCoeff();
      for (Index k = 0; k < v.rows(); ++k) {
        if (std::abs(v(k, a)) > 1e-10 * scale) {
          CHECK(v(k, a) > 0.0);
          break;
        }
      }
    }

    // Any (B_x T, B_z T^-T) maps to the same representative.
    MatrixXd t = oracle::gaussian(rng, s, s) + 3.0 * MatrixXd::Identity(s, s);
    Parameters moved = pr.params;
    moved.bx = pr.params.bx * t;
    moved.bz = pr.params.bz * t.inverse().transpose();
    const Parameters id2 = identify(moved, pr.design);
    CHECK((id2.bx - id.bx).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((id2.bz - id.bz).cwiseAbs().maxCoeff() < 1e-7);

    // Idempotent.
    const Parameters id3 = identify(id, pr.design);
    CHECK((id3.bx - id.bx).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("observations") {
  const Observations g({0, 2, 1, 2}, 3);
  CHECK(g.size() == 4);
  const MatrixXd ind = g.indicator();
  CHECK(ind.rowwise().sum() == VectorXd::Ones(4));
  CHECK(ind(1, 2) == 1.0);
  const Observations back = Observations::from_indicator(ind);
  CHECK(back.categories() == g.categories());
  const Observations sub = g.subset({3, 3, 0});
  CHECK(sub.categories() == std::vector<Index>{2, 2, 0});
  CHECK_THROWS_AS(Observations({0, 3}, 3), UnknownLabel);
  MatrixXd bad = ind;
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(Observations::from_indicator(bad), DimensionMismatch);
}
