#include "mcdm/fitter.hpp"

#include <cmath>
#include <iomanip>
#include <iostream>
#include <string>

#include "mcdm/errors.hpp"
#include "mcdm/linalg.hpp"

namespace mcdm {

namespace {

// Starting values use H = 4 (G - 1/K).
constexpr double kInitStep = 4.0;

MatrixXd gram_inverse(const MatrixXd& d, const char* what) {
  try {
    const MatrixXd root = linalg::sym_inv_sqrt(MatrixXd(d.transpose() * d));
    return root * root;
  } catch (const NotPositiveDefinite&) {
    throw SingularNormalEquations(std::string(what) + "'" + what + " is singular");
  }
}

void check_rank(const DesignSet& design, Index rank) {
  if (rank < 0) throw RankOutOfRange("rank must be nonnegative");
  const Index limit = std::min(design.predictors(), design.z_columns());
  if (rank > limit) {
    throw RankOutOfRange("rank " + std::to_string(rank) + " exceeds min(P, Q) = " +
                         std::to_string(limit));
  }
}

bool masks_all_free(const std::optional<ConstraintMasks>& masks) {
  return !masks || ((masks->bx.array() != 0.0).all() && (masks->bz.array() != 0.0).all());
}

}  // namespace

UpdateScheme parse_update_scheme(std::string_view text) {
  if (text == "joint-gsvd") return UpdateScheme::joint_gsvd;
  if (text == "alternating") return UpdateScheme::alternating;
  if (text == "dimension-wise") return UpdateScheme::dimension_wise;
  throw ConfigError("unknown update scheme '" + std::string(text) +
                    "' (expected joint-gsvd, alternating or dimension-wise)");
}

std::string to_string(UpdateScheme scheme) {
  switch (scheme) {
    case UpdateScheme::joint_gsvd: return "joint-gsvd";
    case UpdateScheme::alternating: return "alternating";
    case UpdateScheme::dimension_wise: return "dimension-wise";
  }
  return "unknown";
}

Index parameter_count(Index t, Index rank, Index p, Index q) {
  return t + rank * (p + q - rank);
}

PrecomputedFactors PrecomputedFactors::compute(const DesignSet& design) {
  PrecomputedFactors f;
  const MatrixXd xtx = design.x.transpose() * design.x;
  const MatrixXd ztz = design.z.transpose() * design.z;
  f.xtx_inv_sqrt = linalg::sym_inv_sqrt(xtx);
  f.x_left = f.xtx_inv_sqrt * design.x.transpose();
  f.x_pinv = f.xtx_inv_sqrt * f.x_left;
  f.ztz_inv_sqrt = linalg::sym_inv_sqrt(ztz);
  f.z_right = design.z * f.ztz_inv_sqrt;
  f.w_pinv = gram_inverse(design.w, "W") * design.w.transpose();
  return f;
}

MatrixXd working_responses(const MatrixXd& theta, const Observations& g, const MatrixXd& pi, double step) {
  if (theta.rows() != g.size() || theta.cols() != g.category_count() || pi.rows() != theta.rows() ||
      pi.cols() != theta.cols()) {
    throw DimensionMismatch("theta, G and Pi must have identical shapes");
  }
  MatrixXd h = theta - step * pi;
  for (Index i = 0; i < g.size(); ++i) h(i, g[i]) += step;
  return h;
}

VectorXd update_intercepts(const MatrixXd& h, const DesignSet& design, const MatrixXd& bx,
                           const MatrixXd& bz) {
  if (h.rows() != design.observations() || h.cols() != design.categories()) {
    throw DimensionMismatch("working responses do not match the design");
  }
  VectorXd m_free = h.colwise().mean().transpose();
  if (bx.cols() > 0) {
    const VectorXd mean_u = (design.x * bx).colwise().mean().transpose();
    m_free -= design.z * (bz * mean_u);
  }
  return gram_inverse(design.w, "W") * (design.w.transpose() * m_free);
}

std::pair<MatrixXd, MatrixXd> update_bilinear(const MatrixXd& hc, const DesignSet& design,
                                              Index rank) {
  check_rank(design, rank);
  if (rank == 0) {
    return {MatrixXd::Zero(design.predictors(), 0), MatrixXd::Zero(design.z_columns(), 0)};
  }
  const MatrixXd x_root = linalg::sym_inv_sqrt(MatrixXd(design.x.transpose() * design.x));
  const MatrixXd z_root = linalg::sym_inv_sqrt(MatrixXd(design.z.transpose() * design.z));
  const MatrixXd core = x_root * design.x.transpose() * hc * design.z * z_root;
  const auto f = linalg::truncate(linalg::svd(core), rank);
  return {x_root * f.left * f.singular_values.asDiagonal(), z_root * f.right};
}

MatrixXd update_bx_given_v(const MatrixXd& hc, const DesignSet& design, const MatrixXd& v) {
  return gram_inverse(design.x, "X") * (design.x.transpose() * (hc * v));
}

MatrixXd update_bz_given_u(const MatrixXd& h, const DesignSet& design, const MatrixXd& u,
                           const VectorXd& m) {
  const MatrixXd hc = h.rowwise() - m.transpose();
  const MatrixXd z_root = linalg::sym_inv_sqrt(MatrixXd(design.z.transpose() * design.z));
  const MatrixXd target = z_root * design.z.transpose() * (hc.transpose() * u);
  const auto f = linalg::svd(target);
  return z_root * f.left * f.right.transpose();
}

MmEngine::MmEngine(const Observations& g, const DesignSet& design, Index rank, FitOptions options)
    : g_(&g), design_(&design), rank_(rank), options_(std::move(options)) {
  if (g.size() != design.observations()) {
    throw DimensionMismatch("G has " + std::to_string(g.size()) + " rows but X has " +
                            std::to_string(design.observations()));
  }
  if (g.category_count() != design.categories()) {
    throw DimensionMismatch("G has " + std::to_string(g.category_count()) +
                            " categories but Z/W have " + std::to_string(design.categories()) +
                            " rows");
  }
  if (options_.max_iterations < 1) throw InvalidOptions("max_iterations must be at least 1");
  if (!(options_.tolerance > 0.0)) throw InvalidOptions("tolerance must be positive");
  if (!(options_.step > 0.0) || !std::isfinite(options_.step)) throw InvalidOptions("step must be positive");
  check_rank(design, rank);
  factors_ = PrecomputedFactors::compute(design);

  if (options_.masks) {
    if (options_.scheme != UpdateScheme::dimension_wise) {
      throw InvalidOptions("constraint masks require the dimension-wise update scheme");
    }
    const auto& mk = *options_.masks;
    if (mk.bx.rows() != design.predictors() || mk.bx.cols() != rank ||
        mk.bz.rows() != design.z_columns() || mk.bz.cols() != rank) {
      throw DimensionMismatch("constraint masks must be P x S and Q x S");
    }
    if (((mk.bx.array() != 0.0) && (mk.bx.array() != 1.0)).any() ||
        ((mk.bz.array() != 0.0) && (mk.bz.array() != 1.0)).any()) {
      throw InvalidOptions("constraint masks must contain only 0 and 1");
    }
  }
  if (options_.scheme == UpdateScheme::dimension_wise) {
    auto make = [](const MatrixXd& d, const MatrixXd* mask, Index s, const char* what) {
      MaskedSolver solver;
      for (Index r = 0; r < d.cols(); ++r) {
        if (!mask || (*mask)(r, s) != 0.0) solver.free.push_back(r);
      }
      if (solver.free.empty()) {
        throw UnidentifiableMask(std::string("mask leaves no free ") + what + " entries in dimension " +
                                 std::to_string(s + 1));
      }
      MatrixXd sub(d.rows(), static_cast<Index>(solver.free.size()));
      for (std::size_t j = 0; j < solver.free.size(); ++j) sub.col(static_cast<Index>(j)) = d.col(solver.free[j]);
      solver.gram = sub.transpose() * sub;
      try {
        const MatrixXd root = linalg::sym_inv_sqrt(solver.gram);
        solver.solve = root * root * sub.transpose();
      } catch (const NotPositiveDefinite&) {
        throw UnidentifiableMask(std::string("unmasked ") + what + " columns are rank deficient in dimension " +
                                 std::to_string(s + 1));
      }
      return solver;
    };
    for (Index s = 0; s < rank; ++s) {
      bx_solvers_.push_back(make(design.x, options_.masks ? &options_.masks->bx : nullptr, s, "B_x"));
      bz_solvers_.push_back(make(design.z, options_.masks ? &options_.masks->bz : nullptr, s, "B_z"));
    }
  }
  initialize();
}

void MmEngine::refresh_theta(const VectorXd& m) {
  theta_ = m.transpose().replicate(design_->observations(), 1);
  if (rank_ > 0) {
    bilinear_.noalias() = (design_->x * params_.bx) * (design_->z * params_.bz).transpose();
    theta_ += bilinear_;
  } else {
    bilinear_.setZero(design_->observations(), design_->categories());
  }
  deviance_ = deviance_from_theta(*g_, theta_);
  if (!std::isfinite(deviance_)) throw Diverged("deviance became non-finite");
}

void MmEngine::initialize() {
  const auto k = static_cast<double>(design_->categories());
  MatrixXd h = MatrixXd::Constant(g_->size(), design_->categories(), -kInitStep / k);
  for (Index i = 0; i < g_->size(); ++i) h(i, (*g_)[i]) += kInitStep;

  params_.bw = factors_.w_pinv * h.colwise().mean().transpose();
  const VectorXd m = design_->w * params_.bw;
  params_.bx = MatrixXd::Zero(design_->predictors(), rank_);
  params_.bz = MatrixXd::Zero(design_->z_columns(), rank_);
  if (rank_ > 0) {
    update_joint(h.rowwise() - m.transpose());
    if (options_.masks) {
      params_.bx = params_.bx.cwiseProduct(options_.masks->bx);
      params_.bz = params_.bz.cwiseProduct(options_.masks->bz);
    }
    if (options_.scheme == UpdateScheme::dimension_wise) {
      // Dimension-wise updates keep each profile-score column at unit length.
      for (Index s = 0; s < rank_; ++s) {
        const double len = (design_->z * params_.bz.col(s)).norm();
        if (len > 0.0) {
          params_.bz.col(s) /= len;
          params_.bx.col(s) *= len;
        }
      }
    }
  }
  refresh_theta(m);
}

void MmEngine::update_joint(const MatrixXd& hc) {
  const MatrixXd core = factors_.x_left * hc * factors_.z_right;
  const auto f = linalg::truncate(linalg::svd(core), rank_);
  params_.bx = factors_.xtx_inv_sqrt * f.left * f.singular_values.asDiagonal();
  params_.bz = factors_.ztz_inv_sqrt * f.right;
}

void MmEngine::update_alternating(const MatrixXd& hc) {
  const MatrixXd v = design_->z * params_.bz;
  params_.bx = factors_.x_pinv * (hc * v);
  const MatrixXd u = design_->x * params_.bx;
  const MatrixXd target = factors_.z_right.transpose() * (hc.transpose() * u);
  const auto f = linalg::svd(target);
  params_.bz = factors_.ztz_inv_sqrt * f.left * f.right.transpose();
}

void MmEngine::update_dimensionwise(const MatrixXd& hc) {
  MatrixXd u = design_->x * params_.bx;
  MatrixXd v = design_->z * params_.bz;
  MatrixXd residual = hc - u * v.transpose();
  for (Index s = 0; s < rank_; ++s) {
    residual.noalias() += u.col(s) * v.col(s).transpose();

    const double vv = v.col(s).squaredNorm();
    if (vv > 0.0) {
      const auto& sx = bx_solvers_[static_cast<std::size_t>(s)];
      const VectorXd coef = sx.solve * (residual * v.col(s)) / vv;
      params_.bx.col(s).setZero();
      for (std::size_t j = 0; j < sx.free.size(); ++j) params_.bx(sx.free[j], s) = coef(static_cast<Index>(j));
      u.col(s) = design_->x * params_.bx.col(s);
    }

    // Best unit-length profile-score column for the fixed object scores.
    const auto& sz = bz_solvers_[static_cast<std::size_t>(s)];
    const VectorXd cross = residual.transpose() * u.col(s);
    VectorXd c(static_cast<Index>(sz.free.size()));
    for (std::size_t j = 0; j < sz.free.size(); ++j) c(static_cast<Index>(j)) = design_->z.col(sz.free[j]).dot(cross);
    const VectorXd g = sz.gram.ldlt().solve(c);
    const double len2 = g.dot(c);
    if (len2 > 0.0) {
      params_.bz.col(s).setZero();
      const VectorXd scaled = g / std::sqrt(len2);
      for (std::size_t j = 0; j < sz.free.size(); ++j) params_.bz(sz.free[j], s) = scaled(static_cast<Index>(j));
      v.col(s) = design_->z * params_.bz.col(s);
    }

    residual.noalias() -= u.col(s) * v.col(s).transpose();
  }
}

double MmEngine::step() {
  const MatrixXd pi = probabilities(theta_);
  const MatrixXd h = working_responses(theta_, *g_, pi, options_.step);

  const VectorXd m_free = (h - bilinear_).colwise().mean().transpose();
  params_.bw = factors_.w_pinv * m_free;
  const VectorXd m = design_->w * params_.bw;

  if (rank_ > 0) {
    const MatrixXd hc = h.rowwise() - m.transpose();
    switch (options_.scheme) {
      case UpdateScheme::joint_gsvd: update_joint(hc); break;
      case UpdateScheme::alternating: update_alternating(hc); break;
      case UpdateScheme::dimension_wise: update_dimensionwise(hc); break;
    }
  }
  refresh_theta(m);
  return deviance_;
}

FitResult fit(const Observations& g, const DesignSet& design, Index rank,
              const FitOptions& options) {
  MmEngine engine(g, design, rank, options);
  std::ostream* trace_out =
      options.trace ? (options.trace_stream ? options.trace_stream : &std::clog) : nullptr;

  FitResult result;
  result.trace.push_back(engine.deviance());
  if (trace_out) *trace_out << 0 << '\t' << std::setprecision(12) << engine.deviance() << '\n';

  double previous = engine.deviance();
  for (int it = 1; it <= options.max_iterations; ++it) {
    const double current = engine.step();
    result.trace.push_back(current);
    result.iterations = it;
    if (trace_out) *trace_out << it << '\t' << std::setprecision(12) << current << '\n';
    if (std::abs(previous - current) < options.tolerance) {
      result.converged = true;
      break;
    }
    previous = current;
  }

  if (options.scheme == UpdateScheme::dimension_wise && !masks_all_free(options.masks)) {
    result.params = apply_sign_rule(engine.parameters(), design);
  } else {
    result.params = identify(engine.parameters(), design);
  }
  result.deviance = deviance_from_theta(g, linear_predictor(result.params, design));
  result.npar = parameter_count(design.w_columns(), rank, design.predictors(), design.z_columns());
  result.aic = result.deviance + 2.0 * static_cast<double>(result.npar);
  return result;
}

FitResult fit_dimensionwise(const Observations& g, const DesignSet& design, Index rank,
                            FitOptions options) {
  options.scheme = UpdateScheme::dimension_wise;
  return fit(g, design, rank, options);
}

void write_trace(std::ostream& out, const std::vector<double>& trace) {
  out << std::setprecision(12);
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << '\t' << trace[i] << '\n';
}

}  // namespace mcdm
