#ifndef MCDM_SELECT_HPP
#define MCDM_SELECT_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcdm/design.hpp"
#include "mcdm/fitter.hpp"
#include "mcdm/model.hpp"

namespace mcdm {

// A point in the model space searched by stepwise selection.
struct ModelSpec {
  Index rank = 0;
  TermSet z_terms;
  TermSet w_terms;
  std::vector<Index> x_columns;  // columns of the full predictor matrix

  Index parameter_count() const;
  bool operator==(const ModelSpec&) const = default;
};

// deviance + 2 npar with npar = T + S (P + Q - S).
double aic(const FitResult& fit, const ModelSpec& spec);

// Everything stepwise selection needs to materialize a candidate design.
struct SelectionData {
  MatrixXd x;  // all candidate predictors, already encoded
  std::vector<std::string> x_labels;
  ProfileCoding coding{1};
  std::vector<std::string> response_names;
  std::vector<bool> forced;  // predictors kept in every candidate

  DesignSet design_for(const ModelSpec& spec) const;
  std::string describe(const ModelSpec& spec) const;
  std::string terms_label(const TermSet& terms) const;  // "A+C+A:C", "-" when empty
  std::string columns_label(const std::vector<Index>& columns) const;
};

enum class StepKind { dimensionality, z_structure, x_structure, w_structure };

std::string to_string(StepKind kind);

struct Candidate {
  ModelSpec spec;
  double deviance = 0.0;
  Index npar = 0;
  double aic = 0.0;
  bool converged = false;
  bool feasible = true;
  std::string error;  // set when the fit failed
};

struct SelectionStep {
  StepKind kind = StepKind::dimensionality;
  std::vector<Candidate> candidates;
  std::size_t chosen = 0;

  const Candidate& best() const { return candidates.at(chosen); }
};

struct StepwiseOptions {
  FitOptions fit;
  bool select_rank = true;
  bool select_z = true;
  bool select_x = true;
  bool select_w = true;
  // Ranks tried in the dimensionality step; default 0..min(P, Q).
  std::optional<std::vector<Index>> rank_candidates;
  // Worker threads for candidate fits; 0 uses the hardware concurrency.
  unsigned threads = 0;
};

struct SelectionResult {
  std::vector<SelectionStep> steps;
  ModelSpec final_spec;
};

// Index of the minimal-AIC feasible candidate; ties go to fewer parameters,
// then to the earlier candidate.
std::size_t choose_candidate(const std::vector<Candidate>& candidates);

// Four-stage search: rank, Z structure (order reduction then single
// association re-additions), X columns (greedy backward drops), W order.
// Candidate fit failures are recorded as infeasible, not thrown.
SelectionResult stepwise(const Observations& g, const SelectionData& data, const ModelSpec& full,
                         const StepwiseOptions& options = {});

struct BootstrapResult {
  // Successful replicates, in replicate order, after identify().
  std::vector<MatrixXd> implied;     // P x Q each
  std::vector<VectorXd> intercepts;  // b_w, length T each
  MatrixXd implied_lower;
  MatrixXd implied_upper;
  VectorXd intercepts_lower;
  VectorXd intercepts_upper;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  Index replicates = 0;
  Index failures = 0;

  double failure_fraction() const {
    return replicates > 0 ? static_cast<double>(failures) / static_cast<double>(replicates) : 0.0;
  }
};

// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double p);

// Case bootstrap with percentile intervals at the alpha/2 and 1 - alpha/2
// quantiles. Replicate b draws its rows from a generator seeded with
// (seed, b), so results do not depend on scheduling.
BootstrapResult bootstrap(const Observations& g, const DesignSet& design, Index rank,
                          Index replicates, double alpha, std::uint64_t seed,
                          const FitOptions& options = {}, unsigned threads = 0);

}  // namespace mcdm

#endif  // MCDM_SELECT_HPP
