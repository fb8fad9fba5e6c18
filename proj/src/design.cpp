#include "mcdm/design.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <utility>

#include "mcdm/errors.hpp"
#include "mcdm/linalg.hpp"

namespace mcdm {

namespace {

void combinations(int responses, int order, int start, Term& current, TermSet& out) {
  if (static_cast<int>(current.size()) == order) {
    out.push_back(current);
    return;
  }
  for (int r = start; r <= responses; ++r) {
    current.push_back(r);
    combinations(responses, order, r + 1, current, out);
    current.pop_back();
  }
}

std::string join_labels(const std::vector<std::string>& labels) {
  std::string out;
  for (const auto& l : labels) {
    if (!out.empty()) out += ", ";
    out += l;
  }
  return out;
}

// Gram eigenvalues all above the relative rank tolerance.
bool well_conditioned(const MatrixXd& m) {
  const MatrixXd gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double largest = eig.eigenvalues().maxCoeff();
  return largest > 0.0 && eig.eigenvalues().minCoeff() > linalg::kRankTolerance * largest;
}

}  // namespace

Term parse_term(std::string_view text) {
  Term term;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = std::min(text.find(':', pos), text.size());
    auto part = text.substr(pos, next - pos);
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    int value = 0;
    const auto* end = part.data() + part.size();
    const auto [ptr, ec] = std::from_chars(part.data(), end, value);
    if (part.empty() || ec != std::errc{} || ptr != end) {
      throw ParseError("invalid term '" + std::string(text) + "'");
    }
    if (value < 1) throw TermOutOfRange("term '" + std::string(text) + "' has index < 1");
    term.push_back(value);
    pos = next + 1;
  }
  std::sort(term.begin(), term.end());
  if (std::adjacent_find(term.begin(), term.end()) != term.end()) {
    throw ParseError("term '" + std::string(text) + "' repeats a response");
  }
  return term;
}

std::string format_term(const Term& term) {
  std::string out;
  for (int r : term) {
    if (!out.empty()) out += ':';
    out += std::to_string(r);
  }
  return out;
}

std::string format_term(const Term& term, const std::vector<std::string>& names) {
  std::string out;
  for (int r : term) {
    if (!out.empty()) out += ':';
    out += (r >= 1 && r <= static_cast<int>(names.size())) ? names[r - 1] : std::to_string(r);
  }
  return out;
}

TermSet parse_terms(const std::vector<std::string>& texts) {
  TermSet out;
  for (const auto& t : texts) {
    auto term = parse_term(t);
    if (contains(out, term)) throw ParseError("duplicate term '" + t + "'");
    out.push_back(std::move(term));
  }
  return out;
}

TermSet saturated_terms(int responses, int max_order) {
  TermSet out;
  Term current;
  for (int order = 1; order <= std::min(responses, max_order); ++order) {
    combinations(responses, order, 1, current, out);
  }
  return out;
}

int max_order(const TermSet& terms) {
  int order = 0;
  for (const auto& t : terms) order = std::max(order, static_cast<int>(t.size()));
  return order;
}

TermSet terms_up_to_order(const TermSet& terms, int order) {
  TermSet out;
  std::copy_if(terms.begin(), terms.end(), std::back_inserter(out),
               [order](const Term& t) { return static_cast<int>(t.size()) <= order; });
  return out;
}

bool contains(const TermSet& terms, const Term& term) {
  return std::find(terms.begin(), terms.end(), term) != terms.end();
}

ProfileCoding::ProfileCoding(int responses) : responses_(responses) {
  if (responses < 1 || responses > 30) {
    throw TermOutOfRange("number of binary responses must be in 1..30, got " +
                         std::to_string(responses));
  }
}

bool ProfileCoding::is_high(Index profile, int response) const {
  return ((profile >> (responses_ - response)) & 1) != 0;
}

Index ProfileCoding::index_of(const std::vector<bool>& high) const {
  if (static_cast<int>(high.size()) != responses_) {
    throw DimensionMismatch("profile has " + std::to_string(high.size()) + " responses, expected " +
                            std::to_string(responses_));
  }
  Index k = 0;
  for (bool h : high) k = (k << 1) | (h ? 1 : 0);
  return k;
}

MatrixXd build_profile_design(const ProfileCoding& coding, const TermSet& terms) {
  if (terms.empty()) throw EmptyTermSet("profile design needs at least one term");
  for (const auto& t : terms) {
    if (t.empty()) throw EmptyTermSet("empty term in term set");
    for (int r : t) {
      if (r < 1 || r > coding.responses()) {
        throw TermOutOfRange("term " + format_term(t) + " refers to response " + std::to_string(r) +
                             " but R = " + std::to_string(coding.responses()));
      }
    }
  }
  const Index k = coding.profiles();
  MatrixXd out(k, static_cast<Index>(terms.size()));
  for (Index row = 0; row < k; ++row) {
    for (std::size_t c = 0; c < terms.size(); ++c) {
      double v = 1.0;
      for (int r : terms[c]) v *= coding.code(row, r);
      out(row, static_cast<Index>(c)) = v;
    }
  }
  return out;
}

HierarchyReport validate_hierarchy(const TermSet& z_terms, const TermSet& w_terms) {
  HierarchyReport report;
  for (const auto& t : z_terms) {
    if (!contains(w_terms, t)) report.missing.push_back(t);
  }
  report.ok = report.missing.empty();
  return report;
}

Directive parse_directive(std::string_view text) {
  if (text == "passthrough") return Directive::passthrough;
  if (text == "center") return Directive::center;
  if (text == "standardize") return Directive::standardize;
  throw ConfigError("unknown predictor directive '" + std::string(text) +
                    "' (expected passthrough, center or standardize)");
}

VectorXd EncodedPredictors::encode_row(const std::vector<double>& raw) const {
  if (raw.size() != transforms.size()) {
    throw DimensionMismatch("predictor row has " + std::to_string(raw.size()) +
                            " values, expected " + std::to_string(transforms.size()));
  }
  VectorXd out(static_cast<Index>(raw.size()));
  for (std::size_t j = 0; j < raw.size(); ++j) {
    out(static_cast<Index>(j)) = (raw[j] - transforms[j].shift) / transforms[j].scale;
  }
  return out;
}

EncodedPredictors encode_predictors(const std::vector<PredictorColumn>& columns) {
  if (columns.empty()) throw RankDeficient("no predictor columns");
  const std::size_t n = columns.front().values.size();
  if (n < 2) throw RankDeficient("need at least two observations");

  EncodedPredictors out;
  out.x.resize(static_cast<Index>(n), static_cast<Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const auto& col = columns[j];
    if (col.values.size() != n) {
      throw DimensionMismatch("predictor '" + col.name + "' has " +
                              std::to_string(col.values.size()) + " values, expected " +
                              std::to_string(n));
    }
    Eigen::Map<const VectorXd> v(col.values.data(), static_cast<Index>(n));
    ColumnTransform tr;
    if (col.directive != Directive::passthrough) tr.shift = v.mean();
    if (col.directive == Directive::standardize) {
      const double sd =
          std::sqrt((v.array() - tr.shift).square().sum() / static_cast<double>(n - 1));
      if (!(sd > 0.0)) throw ZeroVariance("predictor '" + col.name + "' is constant");
      tr.scale = sd;
    }
    out.x.col(static_cast<Index>(j)) = (v.array() - tr.shift) / tr.scale;
    out.labels.push_back(col.name);
    out.transforms.push_back(tr);
  }
  require_full_column_rank(out.x, out.labels, "X");
  return out;
}

void require_full_column_rank(const MatrixXd& m, const std::vector<std::string>& labels,
                              std::string_view what) {
  if (m.cols() == 0) throw RankDeficient(std::string(what) + " has no columns");
  if (!linalg::all_finite(m)) throw RankDeficient(std::string(what) + " has non-finite entries");
  if (well_conditioned(m)) return;

  // Name the culprits: scan left to right, keeping columns that enlarge the span.
  std::vector<Index> kept;
  std::vector<std::string> dependent;
  for (Index j = 0; j < m.cols(); ++j) {
    MatrixXd trial(m.rows(), static_cast<Index>(kept.size()) + 1);
    for (std::size_t a = 0; a < kept.size(); ++a) trial.col(static_cast<Index>(a)) = m.col(kept[a]);
    trial.rightCols(1) = m.col(j);
    if (well_conditioned(trial)) {
      kept.push_back(j);
    } else {
      dependent.push_back(j < static_cast<Index>(labels.size())
                              ? labels[static_cast<std::size_t>(j)]
                              : "column " + std::to_string(j + 1));
    }
  }
  throw RankDeficient(std::string(what) + " is not of full column rank; dependent columns: " +
                      join_labels(dependent));
}

std::vector<std::string> default_response_names(int responses) {
  std::vector<std::string> out;
  for (int r = 1; r <= responses; ++r) out.push_back("Y" + std::to_string(r));
  return out;
}

MatrixXd deviation_contrasts(Index categories) {
  MatrixXd out = MatrixXd::Constant(categories, categories - 1, -1.0 / static_cast<double>(categories));
  for (Index j = 0; j + 1 < categories; ++j) out(j, j) += 1.0;
  return out;
}

DesignSet DesignSet::from_profiles(MatrixXd x, std::vector<std::string> x_labels,
                                   const ProfileCoding& coding, TermSet z_terms, TermSet w_terms,
                                   std::vector<std::string> response_names) {
  const auto report = validate_hierarchy(z_terms, w_terms);
  if (!report.ok) {
    std::string missing;
    for (const auto& t : report.missing) {
      if (!missing.empty()) missing += ", ";
      missing += format_term(t);
    }
    throw HierarchyViolation("Z terms missing from W: " + missing);
  }
  if (response_names.empty()) response_names = default_response_names(coding.responses());
  if (static_cast<int>(response_names.size()) != coding.responses()) {
    throw DimensionMismatch("expected " + std::to_string(coding.responses()) + " response names");
  }

  DesignSet d;
  d.z = build_profile_design(coding, z_terms);
  d.w = build_profile_design(coding, w_terms);
  for (const auto& t : z_terms) d.z_labels.push_back(format_term(t, response_names));
  for (const auto& t : w_terms) d.w_labels.push_back(format_term(t, response_names));
  d.z_terms = std::move(z_terms);
  d.w_terms = std::move(w_terms);
  d.coding = coding;
  d.response_names = std::move(response_names);
  require_full_column_rank(d.z, d.z_labels, "Z");
  require_full_column_rank(d.w, d.w_labels, "W");
  return d.with_x(std::move(x), std::move(x_labels));
}

DesignSet DesignSet::from_matrices(MatrixXd x, std::vector<std::string> x_labels, MatrixXd z,
                                   std::vector<std::string> z_labels, MatrixXd w,
                                   std::vector<std::string> w_labels) {
  if (z.rows() != w.rows()) {
    throw DimensionMismatch("Z has " + std::to_string(z.rows()) + " rows but W has " +
                            std::to_string(w.rows()));
  }
  DesignSet d;
  d.z = std::move(z);
  d.w = std::move(w);
  d.z_labels = std::move(z_labels);
  d.w_labels = std::move(w_labels);
  for (Index j = static_cast<Index>(d.z_labels.size()); j < d.z.cols(); ++j) d.z_labels.push_back("z" + std::to_string(j + 1));
  for (Index j = static_cast<Index>(d.w_labels.size()); j < d.w.cols(); ++j) d.w_labels.push_back("w" + std::to_string(j + 1));
  require_full_column_rank(d.z, d.z_labels, "Z");
  require_full_column_rank(d.w, d.w_labels, "W");
  return d.with_x(std::move(x), std::move(x_labels));
}

DesignSet DesignSet::with_x(MatrixXd new_x, std::vector<std::string> new_labels) const {
  for (Index j = static_cast<Index>(new_labels.size()); j < new_x.cols(); ++j) {
    new_labels.push_back("x" + std::to_string(j + 1));
  }
  require_full_column_rank(new_x, new_labels, "X");
  DesignSet d = *this;
  d.x = std::move(new_x);
  d.x_labels = std::move(new_labels);
  return d;
}

}  // namespace mcdm
