#include "mcdm/interpret.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mcdm/errors.hpp"

namespace mcdm {

namespace {

const ProfileCoding& require_coding(const DesignSet& design) {
  if (!design.coding) {
    throw TargetNotInModel("log odds effects need a design built from binary response profiles");
  }
  return *design.coding;
}

bool mentions(const TermSet& terms, int response) {
  for (const auto& t : terms) {
    for (int r : t) {
      if (r == response) return true;
    }
  }
  return false;
}

void check_target(const DesignSet& design, int response) {
  const auto& coding = require_coding(design);
  if (response < 1 || response > coding.responses()) {
    throw TargetNotInModel("response " + std::to_string(response) + " is outside 1.." +
                           std::to_string(coding.responses()));
  }
  if (!mentions(design.z_terms, response) && !mentions(design.w_terms, response)) {
    throw TargetNotInModel("response " + std::to_string(response) +
                           " appears in no Z or W term; there is nothing to contrast");
  }
}

std::vector<bool> base_levels(const EffectQuery& q, int responses) {
  if (q.holding.empty()) return std::vector<bool>(static_cast<std::size_t>(responses), false);
  if (static_cast<int>(q.holding.size()) != responses) {
    throw DimensionMismatch("holding pattern has " + std::to_string(q.holding.size()) +
                            " entries, expected " + std::to_string(responses));
  }
  return q.holding;
}

Index profile_with(std::vector<bool> levels, const ProfileCoding& coding, int r, bool r_high,
                   int r2 = 0, bool r2_high = false) {
  levels[static_cast<std::size_t>(r - 1)] = r_high;
  if (r2 != 0) levels[static_cast<std::size_t>(r2 - 1)] = r2_high;
  return coding.index_of(levels);
}

// Signed combination of profiles evaluated on the design rows; the design
// entries are dyadic, so contrasts that cancel do so exactly.
Effect contrast(const std::vector<std::pair<Index, double>>& profiles, const EffectQuery& q,
                const FitResult& fit, const DesignSet& design) {
  VectorXd cw = VectorXd::Zero(design.w_columns());
  VectorXd cz = VectorXd::Zero(design.z_columns());
  for (const auto& [k, sign] : profiles) {
    cw += sign * design.w.row(k).transpose();
    cz += sign * design.z.row(k).transpose();
  }
  if (q.x.size() != design.predictors()) {
    throw DimensionMismatch("query x has " + std::to_string(q.x.size()) + " entries, expected " +
                            std::to_string(design.predictors()));
  }
  Effect e;
  e.intercept_contrast = cw.dot(fit.params.bw);
  e.slope = fit.params.rank() > 0 ? VectorXd(implied_coefficients(fit.params) * cz)
                                  : VectorXd(VectorXd::Zero(design.predictors()));
  e.value_at_x = e.intercept_contrast + q.x.dot(e.slope);
  return e;
}

}  // namespace

MatrixXd implied_coefficients(const Parameters& params) {
  if (params.rank() == 0) return MatrixXd::Zero(params.bx.rows(), params.bz.rows());
  return params.bx * params.bz.transpose();
}

ImpliedCoefficients implied_coefficients(const Parameters& params, const DesignSet& design) {
  ImpliedCoefficients out;
  out.a = params.rank() > 0 ? implied_coefficients(params)
                            : MatrixXd(MatrixXd::Zero(design.predictors(), design.z_columns()));
  out.row_labels = design.x_labels;
  out.column_labels = design.z_labels;
  return out;
}

EffectQuery EffectQuery::single(VectorXd x, int response, std::vector<bool> holding) {
  return {std::move(x), response, 0, std::move(holding)};
}

EffectQuery EffectQuery::pair(VectorXd x, int response, int partner, std::vector<bool> holding) {
  return {std::move(x), response, partner, std::move(holding)};
}

Effect log_odds(const EffectQuery& query, const FitResult& fit, const DesignSet& design) {
  if (query.is_pair()) throw InvalidOptions("log_odds takes a single-response query");
  check_target(design, query.response);
  const auto& coding = *design.coding;
  const auto levels = base_levels(query, coding.responses());
  const Index k = profile_with(levels, coding, query.response, true);
  const Index l = profile_with(levels, coding, query.response, false);
  return contrast({{k, 1.0}, {l, -1.0}}, query, fit, design);
}

Effect log_odds_ratio(const EffectQuery& query, const FitResult& fit, const DesignSet& design) {
  if (!query.is_pair() || query.partner == query.response) {
    throw InvalidOptions("log_odds_ratio needs two distinct responses");
  }
  check_target(design, query.response);
  check_target(design, query.partner);
  const auto& coding = *design.coding;
  const auto levels = base_levels(query, coding.responses());
  const int r = query.response;
  const int r2 = query.partner;
  const Index k = profile_with(levels, coding, r, true, r2, true);
  const Index l = profile_with(levels, coding, r, false, r2, true);
  const Index n = profile_with(levels, coding, r, true, r2, false);
  const Index o = profile_with(levels, coding, r, false, r2, false);
  return contrast({{k, 1.0}, {o, 1.0}, {l, -1.0}, {n, -1.0}}, query, fit, design);
}

std::vector<PatternEffect> effects_by_pattern(const EffectQuery& query, const FitResult& fit,
                                              const DesignSet& design) {
  const auto& coding = require_coding(design);
  const int responses = coding.responses();
  std::vector<int> others;
  for (int r = 1; r <= responses; ++r) {
    if (r != query.response && r != query.partner) others.push_back(r);
  }
  std::vector<PatternEffect> out;
  const Index patterns = Index{1} << others.size();
  for (Index p = 0; p < patterns; ++p) {
    EffectQuery q = query;
    q.holding.assign(static_cast<std::size_t>(responses), false);
    // First non-target response varies slowest, as in the profile order.
    for (std::size_t j = 0; j < others.size(); ++j) {
      const bool high = ((p >> (others.size() - 1 - j)) & 1) != 0;
      q.holding[static_cast<std::size_t>(others[j] - 1)] = high;
    }
    out.push_back({q.holding, q.is_pair() ? log_odds_ratio(q, fit, design) : log_odds(q, fit, design)});
  }
  return out;
}

std::vector<Association> intercept_associations(const FitResult& fit, const DesignSet& design) {
  const auto& coding = require_coding(design);
  std::vector<Association> out;
  const VectorXd origin = VectorXd::Zero(design.predictors());
  for (const auto& pair : saturated_terms(coding.responses(), 2)) {
    if (pair.size() != 2 || contains(design.z_terms, pair)) continue;
    Association a;
    a.pair = pair;
    a.label = format_term(pair, design.response_names);
    a.in_w = contains(design.w_terms, pair);
    if (mentions(design.z_terms, pair[0]) || mentions(design.w_terms, pair[0])) {
      if (mentions(design.z_terms, pair[1]) || mentions(design.w_terms, pair[1])) {
        a.log_odds_ratio =
            log_odds_ratio(EffectQuery::pair(origin, pair[0], pair[1]), fit, design).intercept_contrast;
      }
    }
    a.odds_ratio = std::exp(a.log_odds_ratio);
    out.push_back(std::move(a));
  }
  return out;
}

Prediction predict(const FitResult& fit, const DesignSet& design, const VectorXd& x_new) {
  if (x_new.size() != design.predictors()) {
    throw DimensionMismatch("x_new has " + std::to_string(x_new.size()) + " entries, expected " +
                            std::to_string(design.predictors()));
  }
  VectorXd theta = design.w * fit.params.bw;
  if (fit.params.rank() > 0) {
    theta += design.z * (fit.params.bz * (fit.params.bx.transpose() * x_new));
  }
  Prediction out;
  out.profile_probabilities = probabilities(theta.transpose()).transpose();
  if (design.coding) {
    const auto& coding = *design.coding;
    out.marginal_probabilities = VectorXd::Zero(coding.responses());
    for (Index k = 0; k < coding.profiles(); ++k) {
      for (int r = 1; r <= coding.responses(); ++r) {
        if (coding.is_high(k, r)) out.marginal_probabilities(r - 1) += out.profile_probabilities(k);
      }
    }
  }
  return out;
}

CoefficientTable coefficient_table(const FitResult& fit, const DesignSet& design) {
  CoefficientTable table;
  const auto implied = implied_coefficients(fit.params, design);
  table.column_labels = implied.column_labels;
  if (!design.coding) {
    table.row_labels = implied.row_labels;
    table.column_kinds.assign(table.column_labels.size(), "implied");
    table.values = implied.a;
    return table;
  }

  table.row_labels.push_back("1");
  table.row_labels.insert(table.row_labels.end(), implied.row_labels.begin(), implied.row_labels.end());
  table.values.resize(design.predictors() + 1, design.z_columns());
  table.values.bottomRows(design.predictors()) = implied.a;
  const VectorXd origin = VectorXd::Zero(design.predictors());
  for (Index c = 0; c < design.z_columns(); ++c) {
    const Term& term = design.z_terms[static_cast<std::size_t>(c)];
    double intercept = std::numeric_limits<double>::quiet_NaN();
    if (term.size() == 1) {
      table.column_kinds.push_back("log-odds");
      intercept = log_odds(EffectQuery::single(origin, term[0]), fit, design).intercept_contrast;
    } else if (term.size() == 2) {
      table.column_kinds.push_back("log-odds-ratio");
      intercept =
          log_odds_ratio(EffectQuery::pair(origin, term[0], term[1]), fit, design).intercept_contrast;
    } else {
      table.column_kinds.push_back("higher-order");
    }
    table.values(0, c) = intercept;
  }
  return table;
}

}  // namespace mcdm
