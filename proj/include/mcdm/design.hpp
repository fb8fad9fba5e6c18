#ifndef MCDM_DESIGN_HPP
#define MCDM_DESIGN_HPP

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mcdm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// A subset of the responses {1..R}, sorted ascending. {r} is a main effect,
// {r, r'} a two-way association, and so on.
using Term = std::vector<int>;
using TermSet = std::vector<Term>;

// Parses "1", "2:1", "1:2:3". Order within a term does not matter.
Term parse_term(std::string_view text);
std::string format_term(const Term& term);
// Labels a term with response names, e.g. {1, 3} -> "A:M".
std::string format_term(const Term& term, const std::vector<std::string>& names);
TermSet parse_terms(const std::vector<std::string>& texts);

// All terms of order 1..max_order over R responses: mains first, then pairs
// in lexicographic order, and so on. saturated_terms(3, 3) gives the column
// order 1, 2, 3, 1:2, 1:3, 2:3, 1:2:3.
TermSet saturated_terms(int responses, int max_order);
int max_order(const TermSet& terms);
// Terms of `terms` whose order does not exceed `order`, keeping their order.
TermSet terms_up_to_order(const TermSet& terms, int order);
bool contains(const TermSet& terms, const Term& term);

// Bijection between the K = 2^R profiles and the R binary responses. Response
// 1 varies slowest; low is coded -1/2 and high +1/2.
class ProfileCoding {
 public:
  explicit ProfileCoding(int responses);

  int responses() const { return responses_; }
  Index profiles() const { return Index{1} << responses_; }

  // true when response r (1-based) is at its high level in profile k.
  bool is_high(Index profile, int response) const;
  double code(Index profile, int response) const { return is_high(profile, response) ? 0.5 : -0.5; }
  Index index_of(const std::vector<bool>& high) const;

 private:
  int responses_;
};

Eigen::MatrixXd build_profile_design(const ProfileCoding& coding, const TermSet& terms);

struct HierarchyReport {
  bool ok = true;
  TermSet missing;  // z terms absent from w
};

HierarchyReport validate_hierarchy(const TermSet& z_terms, const TermSet& w_terms);

enum class Directive { passthrough, center, standardize };

Directive parse_directive(std::string_view text);

struct PredictorColumn {
  std::string name;
  std::vector<double> values;
  Directive directive = Directive::passthrough;
};

// Affine map applied to one raw predictor column: (value - shift) / scale.
struct ColumnTransform {
  double shift = 0.0;
  double scale = 1.0;
};

struct EncodedPredictors {
  MatrixXd x;
  std::vector<std::string> labels;
  std::vector<ColumnTransform> transforms;

  // Applies the stored transforms to one raw row, e.g. for prediction.
  VectorXd encode_row(const std::vector<double>& raw) const;
};

// Centers/standardizes columns (sample sd, N-1 denominator) and checks that
// the result has full column rank.
EncodedPredictors encode_predictors(const std::vector<PredictorColumn>& columns);

// Throws RankDeficient naming every column that lies in the span of the
// columns before it.
void require_full_column_rank(const MatrixXd& m, const std::vector<std::string>& labels,
                              std::string_view what);

// The three design matrices of the model. X carries no intercept column; the
// intercept role belongs to m = W * b_w.
struct DesignSet {
  MatrixXd x;  // N x P
  MatrixXd z;  // K x Q
  MatrixXd w;  // K x T
  std::vector<std::string> x_labels;
  std::vector<std::string> z_labels;
  std::vector<std::string> w_labels;
  // Profile mode only.
  TermSet z_terms;
  TermSet w_terms;
  std::optional<ProfileCoding> coding;
  std::vector<std::string> response_names;

  Index observations() const { return x.rows(); }
  Index predictors() const { return x.cols(); }
  Index categories() const { return z.rows(); }
  Index z_columns() const { return z.cols(); }
  Index w_columns() const { return w.cols(); }

  // Builds Z and W from term sets and validates ranks and the hierarchy
  // z_terms within w_terms.
  static DesignSet from_profiles(MatrixXd x, std::vector<std::string> x_labels,
                                 const ProfileCoding& coding, TermSet z_terms, TermSet w_terms,
                                 std::vector<std::string> response_names = {});
  // Direct pathway for general categories: only rank checks are enforced.
  static DesignSet from_matrices(MatrixXd x, std::vector<std::string> x_labels, MatrixXd z,
                                 std::vector<std::string> z_labels, MatrixXd w,
                                 std::vector<std::string> w_labels);

  // Same Z/W with a different X (resampling, column selection). Revalidates X.
  DesignSet with_x(MatrixXd new_x, std::vector<std::string> new_labels) const;
};

// Default response names "Y1".."YR".
std::vector<std::string> default_response_names(int responses);

// K x (K-1) contrast basis orthogonal to the all-ones vector: column j is
// e_j - 1/K. Used as a saturated Z/W for plain categories.
MatrixXd deviation_contrasts(Index categories);

}  // namespace mcdm

#endif  // MCDM_DESIGN_HPP
