#ifndef MCDM_INTERPRET_HPP
#define MCDM_INTERPRET_HPP

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "mcdm/design.hpp"
#include "mcdm/fitter.hpp"
#include "mcdm/model.hpp"

namespace mcdm {

// A = B_x B_z': rows are predictors, columns are Z terms. Entries are changes
// in log odds (main-effect columns) or log odds ratios (association columns)
// per unit of the encoded predictor.
struct ImpliedCoefficients {
  MatrixXd a;
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
};

MatrixXd implied_coefficients(const Parameters& params);
ImpliedCoefficients implied_coefficients(const Parameters& params, const DesignSet& design);

// Target response r (single) or pair (r, r'), 1-based. `holding` fixes the
// levels (true = high) of the responses not being contrasted; entries at the
// target positions are ignored. Empty means every other response low.
struct EffectQuery {
  VectorXd x;
  int response = 0;
  int partner = 0;
  std::vector<bool> holding;

  static EffectQuery single(VectorXd x, int response, std::vector<bool> holding = {});
  static EffectQuery pair(VectorXd x, int response, int partner, std::vector<bool> holding = {});
  bool is_pair() const { return partner != 0; }
};

struct Effect {
  double intercept_contrast = 0.0;
  VectorXd slope;  // per predictor
  double value_at_x = 0.0;
};

// log(pi_k / pi_l) for the two profiles that differ only in response r
// (k high, l low): m_k - m_l + x' B_x (v_k - v_l).
Effect log_odds(const EffectQuery& query, const FitResult& fit, const DesignSet& design);

// log(pi_k pi_o / (pi_l pi_n)) with k = (r high, r' high), l = (low, high),
// n = (high, low), o = (low, low).
Effect log_odds_ratio(const EffectQuery& query, const FitResult& fit, const DesignSet& design);

struct PatternEffect {
  std::vector<bool> holding;
  Effect effect;
};

// The query evaluated under every assignment of the non-target responses.
std::vector<PatternEffect> effects_by_pattern(const EffectQuery& query, const FitResult& fit,
                                              const DesignSet& design);

struct Association {
  Term pair;
  std::string label;
  double log_odds_ratio = 0.0;
  double odds_ratio = 1.0;
  bool in_w = false;
};

// Pairwise log odds ratios at x = 0 for every pair of responses that is not a
// Z term; these do not depend on the predictors. Pairs absent from W report 0.
std::vector<Association> intercept_associations(const FitResult& fit, const DesignSet& design);

struct Prediction {
  VectorXd profile_probabilities;
  VectorXd marginal_probabilities;  // P(response r high); empty without a profile coding
};

Prediction predict(const FitResult& fit, const DesignSet& design, const VectorXd& x_new);

// Coefficient table: row "1" holds intercept contrasts (log odds for main-effect
// columns, log odds ratio for pair columns), the remaining rows hold A.
struct CoefficientTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  // "log-odds", "log-odds-ratio", "higher-order" (no intercept contrast), or
  // "implied" when the design has no profile coding.
  std::vector<std::string> column_kinds;
  MatrixXd values;
};

CoefficientTable coefficient_table(const FitResult& fit, const DesignSet& design);

}  // namespace mcdm

#endif  // MCDM_INTERPRET_HPP
