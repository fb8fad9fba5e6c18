#ifndef MCDM_MODEL_HPP
#define MCDM_MODEL_HPP

#include <Eigen/Dense>

#include <vector>

#include "mcdm/design.hpp"

namespace mcdm {

// b_w (T), B_x (P x S), B_z (Q x S). S = 0 is the intercept-only model.
struct Parameters {
  VectorXd bw;
  MatrixXd bx;
  MatrixXd bz;

  Index rank() const { return bx.cols(); }
};

// Ungrouped multinomial outcomes: one category per observation. The indicator
// matrix G is materialized on demand.
class Observations {
 public:
  Observations() = default;
  Observations(std::vector<Index> categories, Index category_count);
  // Each row must contain a single 1 and zeros elsewhere.
  static Observations from_indicator(const MatrixXd& g);

  Index size() const { return static_cast<Index>(categories_.size()); }
  Index category_count() const { return category_count_; }
  const std::vector<Index>& categories() const { return categories_; }
  Index operator[](Index i) const { return categories_[static_cast<std::size_t>(i)]; }
  MatrixXd indicator() const;
  // Observations at the given rows, in order (bootstrap resampling).
  Observations subset(const std::vector<Index>& rows) const;

 private:
  std::vector<Index> categories_;
  Index category_count_ = 0;
};

struct FitState {
  MatrixXd theta;
  MatrixXd pi;
  double deviance = 0.0;
  int iterations = 0;
};

// m = W * b_w.
VectorXd intercepts(const Parameters& params, const DesignSet& design);
// V = Z * B_z, the profile scores.
MatrixXd profile_scores(const Parameters& params, const DesignSet& design);

// Theta = 1 (W b_w)' + X B_x B_z' Z'. Throws DimensionMismatch.
MatrixXd linear_predictor(const Parameters& params, const DesignSet& design);

// Row-wise softmax with row-max subtraction.
template <typename Derived>
MatrixXd probabilities(const Eigen::MatrixBase<Derived>& theta) {
  MatrixXd out = theta.derived();
  out.colwise() -= out.rowwise().maxCoeff();
  out = out.array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

// Row-wise log-softmax, log pi_ik computed without forming pi.
MatrixXd log_probabilities(const MatrixXd& theta);

// -2 sum_ik g_ik log pi_ik. Throws ProbabilityUnderflow when an observed cell
// has probability below the smallest normal double.
double deviance(const Observations& g, const MatrixXd& pi);
// Same quantity evaluated through log-softmax of theta; never underflows.
double deviance_from_theta(const Observations& g, const MatrixXd& theta);

FitState evaluate(const Parameters& params, const DesignSet& design, const Observations& g);

// Canonical representative of the identification orbit: V'V = I, U'U diagonal
// and nonincreasing, and each column of V has its first nonzero entry
// positive. Theta is unchanged.
Parameters identify(const Parameters& params, const DesignSet& design);
// Sign rule only; used when masks forbid rotating the solution.
Parameters apply_sign_rule(const Parameters& params, const DesignSet& design);

}  // namespace mcdm

#endif  // MCDM_MODEL_HPP
