#include "mcdm/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mcdm/errors.hpp"
#include "mcdm/linalg.hpp"

namespace mcdm {

namespace {

void check_dimensions(const Parameters& p, const DesignSet& d) {
  auto fail = [](const std::string& what) { throw DimensionMismatch(what); };
  if (p.bw.size() != d.w_columns()) {
    fail("b_w has length " + std::to_string(p.bw.size()) + " but W has " +
         std::to_string(d.w_columns()) + " columns");
  }
  if (p.bx.cols() != p.bz.cols()) fail("B_x and B_z have different ranks");
  if (p.rank() > 0) {
    if (p.bx.rows() != d.predictors()) fail("B_x rows do not match the columns of X");
    if (p.bz.rows() != d.z_columns()) fail("B_z rows do not match the columns of Z");
  }
}

}  // namespace

Observations::Observations(std::vector<Index> categories, Index category_count)
    : categories_(std::move(categories)), category_count_(category_count) {
  if (category_count_ < 2) throw DimensionMismatch("need at least two categories");
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i] < 0 || categories_[i] >= category_count_) {
      throw UnknownLabel("observation " + std::to_string(i + 1) + " has category " +
                         std::to_string(categories_[i]) + " outside 0.." +
                         std::to_string(category_count_ - 1));
    }
  }
}

Observations Observations::from_indicator(const MatrixXd& g) {
  std::vector<Index> cats(static_cast<std::size_t>(g.rows()));
  for (Index i = 0; i < g.rows(); ++i) {
    Index ones = 0;
    for (Index k = 0; k < g.cols(); ++k) {
      const double v = g(i, k);
      if (v == 1.0) {
        ++ones;
        cats[static_cast<std::size_t>(i)] = k;
      } else if (v != 0.0) {
        throw DimensionMismatch("indicator row " + std::to_string(i + 1) + " has a non 0/1 entry");
      }
    }
    if (ones != 1) {
      throw DimensionMismatch("indicator row " + std::to_string(i + 1) + " does not sum to 1");
    }
  }
  return Observations(std::move(cats), g.cols());
}

MatrixXd Observations::indicator() const {
  MatrixXd g = MatrixXd::Zero(size(), category_count_);
  for (Index i = 0; i < size(); ++i) g(i, (*this)[i]) = 1.0;
  return g;
}

Observations Observations::subset(const std::vector<Index>& rows) const {
  std::vector<Index> cats;
  cats.reserve(rows.size());
  for (Index r : rows) cats.push_back((*this)[r]);
  return Observations(std::move(cats), category_count_);
}

VectorXd intercepts(const Parameters& params, const DesignSet& design) {
  check_dimensions(params, design);
  return design.w * params.bw;
}

MatrixXd profile_scores(const Parameters& params, const DesignSet& design) {
  check_dimensions(params, design);
  if (params.rank() == 0) return MatrixXd::Zero(design.categories(), 0);
  return design.z * params.bz;
}

MatrixXd linear_predictor(const Parameters& params, const DesignSet& design) {
  check_dimensions(params, design);
  const VectorXd m = design.w * params.bw;
  MatrixXd theta = m.transpose().replicate(design.observations(), 1);
  if (params.rank() > 0) {
    theta.noalias() += (design.x * params.bx) * (design.z * params.bz).transpose();
  }
  return theta;
}

MatrixXd log_probabilities(const MatrixXd& theta) {
  MatrixXd out = theta;
  out.colwise() -= theta.rowwise().maxCoeff();
  const VectorXd log_norm = out.array().exp().rowwise().sum().log().matrix();
  out.colwise() -= log_norm;
  return out;
}

double deviance(const Observations& g, const MatrixXd& pi) {
  if (pi.rows() != g.size() || pi.cols() != g.category_count()) {
    throw DimensionMismatch("probability matrix does not match the observations");
  }
  double sum = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    const double p = pi(i, g[i]);
    if (!(p >= std::numeric_limits<double>::min())) {
      throw ProbabilityUnderflow("observation " + std::to_string(i + 1) +
                                 " has fitted probability below the smallest normal double");
    }
    sum += std::log(p);
  }
  return -2.0 * sum;
}

double deviance_from_theta(const Observations& g, const MatrixXd& theta) {
  if (theta.rows() != g.size() || theta.cols() != g.category_count()) {
    throw DimensionMismatch("canonical parameter matrix does not match the observations");
  }
  double sum = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    const auto row = theta.row(i);
    const double top = row.maxCoeff();
    sum += row(g[i]) - top - std::log((row.array() - top).exp().sum());
  }
  return -2.0 * sum;
}

FitState evaluate(const Parameters& params, const DesignSet& design, const Observations& g) {
  FitState state;
  state.theta = linear_predictor(params, design);
  state.pi = probabilities(state.theta);
  state.deviance = deviance_from_theta(g, state.theta);
  return state;
}

Parameters apply_sign_rule(const Parameters& params, const DesignSet& design) {
  Parameters out = params;
  if (out.rank() == 0) return out;
  const MatrixXd v = design.z * out.bz;
  for (Index s = 0; s < v.cols(); ++s) {
    const double scale = v.col(s).cwiseAbs().maxCoeff();
    for (Index k = 0; k < v.rows(); ++k) {
      if (std::abs(v(k, s)) > 1e-10 * scale) {
        if (v(k, s) < 0.0) {
          out.bx.col(s) *= -1.0;
          out.bz.col(s) *= -1.0;
        }
        break;
      }
    }
  }
  return out;
}

Parameters identify(const Parameters& params, const DesignSet& design) {
  check_dimensions(params, design);
  const Index rank = params.rank();
  if (rank == 0) return params;

  // Rotate within the metrics: with A = B_x B_z', take the SVD of
  // (X'X)^(1/2) A (Z'Z)^(1/2) = P Phi Q' and set B_x = (X'X)^(-1/2) P Phi,
  // B_z = (Z'Z)^(-1/2) Q.
  const MatrixXd xtx = design.x.transpose() * design.x;
  const MatrixXd ztz = design.z.transpose() * design.z;
  const MatrixXd x_root = linalg::sym_sqrt(xtx);
  const MatrixXd z_root = linalg::sym_sqrt(ztz);
  const MatrixXd implied = params.bx * params.bz.transpose();
  const auto factors = linalg::truncate(linalg::svd(x_root * implied * z_root), rank);

  Parameters out;
  out.bw = params.bw;
  out.bx = linalg::sym_inv_sqrt(xtx) * factors.left * factors.singular_values.asDiagonal();
  out.bz = linalg::sym_inv_sqrt(ztz) * factors.right;
  return apply_sign_rule(out, design);
}

}  // namespace mcdm
