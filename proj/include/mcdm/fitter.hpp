#ifndef MCDM_FITTER_HPP
#define MCDM_FITTER_HPP

#include <Eigen/Dense>

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcdm/design.hpp"
#include "mcdm/model.hpp"

namespace mcdm {

enum class UpdateScheme { joint_gsvd, alternating, dimension_wise };

UpdateScheme parse_update_scheme(std::string_view text);
std::string to_string(UpdateScheme scheme);

// 0/1 masks over B_x (P x S) and B_z (Q x S); a 0 pins that entry to zero.
// Only the dimension-wise scheme honours masks.
struct ConstraintMasks {
  MatrixXd bx;
  MatrixXd bz;
};

struct FitOptions {
  int max_iterations = 10000;
  // Stop once the deviance decreases by less than this in one iteration.
  double tolerance = 1e-8;
  UpdateScheme scheme = UpdateScheme::joint_gsvd;
  // Working-response step 1/omega for a curvature bound omega. The multinomial
  // Hessian is bounded by I/2, so 2 keeps every iteration monotone; 4 takes
  // larger steps that can overshoot when predictors are not centered.
  double step = 2.0;
  std::optional<ConstraintMasks> masks;
  // Stream "iteration<TAB>deviance" lines to trace_stream (std::clog if null).
  bool trace = false;
  std::ostream* trace_stream = nullptr;
};

struct FitResult {
  Parameters params;
  double deviance = 0.0;
  Index npar = 0;
  double aic = 0.0;
  int iterations = 0;
  bool converged = false;
  // Deviance after initialization (entry 0) and after every MM iteration.
  std::vector<double> trace;
};

// npar = T + S (P + Q - S).
Index parameter_count(Index t, Index rank, Index p, Index q);

// Matrices that stay fixed across MM iterations.
struct PrecomputedFactors {
  MatrixXd xtx_inv_sqrt;  // (X'X)^(-1/2)
  MatrixXd x_left;        // (X'X)^(-1/2) X'
  MatrixXd x_pinv;        // (X'X)^(-1) X'
  MatrixXd ztz_inv_sqrt;  // (Z'Z)^(-1/2)
  MatrixXd z_right;       // Z (Z'Z)^(-1/2)
  MatrixXd w_pinv;        // (W'W)^(-1) W'

  static PrecomputedFactors compute(const DesignSet& design);
};

// H = Theta + step (G - Pi).
MatrixXd working_responses(const MatrixXd& theta, const Observations& g, const MatrixXd& pi,
                           double step = 4.0);

// b_w = (W'W)^(-1) W' m~ with m~ the column means of H - X B_x B_z' Z'.
VectorXd update_intercepts(const MatrixXd& h, const DesignSet& design, const MatrixXd& bx,
                           const MatrixXd& bz);

// Rank-S solution of min ||H_c - X B_x B_z' Z'||^2 through the SVD of
// (X'X)^(-1/2) X' H_c Z (Z'Z)^(-1/2). Throws RankOutOfRange if S > min(P, Q).
std::pair<MatrixXd, MatrixXd> update_bilinear(const MatrixXd& hc, const DesignSet& design,
                                              Index rank);

// B_x = (X'X)^(-1) X' H_c V for fixed V.
MatrixXd update_bx_given_v(const MatrixXd& hc, const DesignSet& design, const MatrixXd& v);

// B_z = (Z'Z)^(-1/2) P_S Q_S' from the SVD of (Z'Z)^(-1/2) Z' H_c' U, where
// H_c = H - 1 m'. Keeps B_z' Z'Z B_z = I.
MatrixXd update_bz_given_u(const MatrixXd& h, const DesignSet& design, const MatrixXd& u,
                           const VectorXd& m);

// One MM fit in progress. Holds pointers to the (read-only) data, so the data
// must outlive the engine; the engine itself can move between threads.
class MmEngine {
 public:
  MmEngine(const Observations& g, const DesignSet& design, Index rank, FitOptions options);

  // Runs one MM iteration and returns the new deviance.
  double step();

  const Parameters& parameters() const { return params_; }
  const MatrixXd& theta() const { return theta_; }
  double deviance() const { return deviance_; }
  const PrecomputedFactors& factors() const { return factors_; }

 private:
  struct MaskedSolver {
    std::vector<Index> free;  // unmasked row indices
    MatrixXd solve;           // (D_f' D_f)^(-1) D_f'
    MatrixXd gram;            // D_f' D_f
  };

  void initialize();
  void update_joint(const MatrixXd& hc);
  void update_alternating(const MatrixXd& hc);
  void update_dimensionwise(const MatrixXd& hc);
  void refresh_theta(const VectorXd& m);

  const Observations* g_;
  const DesignSet* design_;
  Index rank_;
  FitOptions options_;
  PrecomputedFactors factors_;
  std::vector<MaskedSolver> bx_solvers_;
  std::vector<MaskedSolver> bz_solvers_;

  Parameters params_;
  MatrixXd bilinear_;
  MatrixXd theta_;
  double deviance_ = 0.0;
};

// Fits the model of the given rank by MM. The returned parameters are
// canonicalized with identify() (sign rule only when masks are active).
// Throws Diverged, RankOutOfRange, InvalidOptions, UnidentifiableMask.
FitResult fit(const Observations& g, const DesignSet& design, Index rank,
              const FitOptions& options = {});

// fit() with the dimension-wise scheme.
FitResult fit_dimensionwise(const Observations& g, const DesignSet& design, Index rank,
                            FitOptions options);

void write_trace(std::ostream& out, const std::vector<double>& trace);

}  // namespace mcdm

#endif  // MCDM_FITTER_HPP
