#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "mcdm/errors.hpp"
#include "reports.hpp"

namespace mcdm::cli {

namespace {

std::string text_cell(const Cell& cell, int decimals) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  const double v = std::get<double>(cell);
  if (std::isnan(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_cell(const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return csv_escape(*s);
  if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  return format_csv_number(std::get<double>(cell));
}

}  // namespace

std::string format_csv_number(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

void render_text(const Report& report, std::ostream& out) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back(report.header);
  for (const auto& row : report.rows) {
    std::vector<std::string> r;
    for (const auto& c : row) r.push_back(text_cell(c, report.decimals));
    cells.push_back(std::move(r));
  }
  std::vector<std::size_t> width(report.header.size(), 0);
  for (const auto& r : cells) {
    for (std::size_t j = 0; j < r.size() && j < width.size(); ++j) width[j] = std::max(width[j], r[j].size());
  }
  if (!report.title.empty()) out << report.title << '\n';
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& r = cells[i];
    for (std::size_t j = 0; j < r.size(); ++j) {
      // First column left-aligned (labels), the rest right-aligned.
      const std::size_t pad = width[j] - r[j].size();
      if (j > 0) out << "  ";
      if (j == 0) {
        out << r[j];
        if (r.size() > 1) out << std::string(pad, ' ');
      } else {
        out << std::string(pad, ' ') << r[j];
      }
    }
    out << '\n';
  }
  out << '\n';
}

void write_csv(const Report& report, std::ostream& out) {
  for (std::size_t j = 0; j < report.header.size(); ++j) out << (j ? "," : "") << csv_escape(report.header[j]);
  out << '\n';
  for (const auto& row : report.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << csv_cell(row[j]);
    out << '\n';
  }
}

void write_csv(const Report& report, const std::filesystem::path& dir) {
  const auto path = dir / (report.name + ".csv");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  write_csv(report, out);
}

std::vector<Report> fit_reports(const FitResult& fit, const DesignSet& design, const FitOptions& options) {
  std::vector<Report> out;

  Report summary{"fit_summary", "Fit", {"quantity", "value"}, {}, 2};
  summary.rows.push_back({std::string("deviance"), fit.deviance});
  summary.rows.push_back({std::string("npar"), static_cast<long long>(fit.npar)});
  summary.rows.push_back({std::string("AIC"), fit.aic});
  summary.rows.push_back({std::string("rank"), static_cast<long long>(fit.params.rank())});
  summary.rows.push_back({std::string("scheme"), to_string(options.scheme)});
  summary.rows.push_back({std::string("iterations"), static_cast<long long>(fit.iterations)});
  summary.rows.push_back({std::string("converged"), std::string(fit.converged ? "yes" : "no")});
  out.push_back(std::move(summary));

  const auto table = coefficient_table(fit, design);
  Report coef{"coefficients", "Coefficients (rows: intercept contrast, predictors; columns: Z terms)", {"row"}, {}, 2};
  coef.header.insert(coef.header.end(), table.column_labels.begin(), table.column_labels.end());
  for (Index i = 0; i < table.values.rows(); ++i) {
    std::vector<Cell> row{table.row_labels[static_cast<std::size_t>(i)]};
    for (Index j = 0; j < table.values.cols(); ++j) row.emplace_back(table.values(i, j));
    coef.rows.push_back(std::move(row));
  }
  out.push_back(std::move(coef));

  Report bw{"intercepts", "Intercept coefficients b_w", {"term", "estimate"}, {}, 3};
  for (Index t = 0; t < design.w_columns(); ++t) {
    bw.rows.push_back({design.w_labels[static_cast<std::size_t>(t)], fit.params.bw(t)});
  }
  out.push_back(std::move(bw));

  if (design.coding) {
    Report assoc{"associations", "Associations not in Z (log odds ratio at x = 0)",
                 {"pair", "in_w", "log_odds_ratio", "odds_ratio"}, {}, 2};
    for (const auto& a : intercept_associations(fit, design)) {
      assoc.rows.push_back({a.label, std::string(a.in_w ? "yes" : "no"), a.log_odds_ratio, a.odds_ratio});
    }
    if (!assoc.rows.empty()) out.push_back(std::move(assoc));
  }
  return out;
}

Report selection_report(const SelectionResult& result, const SelectionData& data) {
  Report r{"selection", "Stepwise selection",
           {"step", "kind", "candidate", "S", "Z", "X", "W", "deviance", "npar", "AIC", "chosen", "note"},
           {}, 2};
  for (std::size_t s = 0; s < result.steps.size(); ++s) {
    const auto& step = result.steps[s];
    for (std::size_t c = 0; c < step.candidates.size(); ++c) {
      const auto& cand = step.candidates[c];
      const std::string z = data.terms_label(cand.spec.z_terms);
      const std::string x = data.columns_label(cand.spec.x_columns);
      const std::string w = data.terms_label(cand.spec.w_terms);
      std::string note = cand.error;
      if (cand.feasible && !cand.converged) note = "not converged";
      if (note.empty()) note = "-";
      r.rows.push_back({static_cast<long long>(s + 1), to_string(step.kind), static_cast<long long>(c + 1),
                        static_cast<long long>(cand.spec.rank), z, x, w,
                        cand.feasible ? Cell{cand.deviance} : Cell{std::nan("")},
                        static_cast<long long>(cand.npar),
                        cand.feasible ? Cell{cand.aic} : Cell{std::nan("")},
                        std::string(c == step.chosen ? "yes" : "no"), note});
    }
  }
  return r;
}

std::vector<Report> bootstrap_reports(const BootstrapResult& boot, const FitResult& estimate,
                                      const DesignSet& design) {
  std::vector<Report> out;
  Report summary{"bootstrap_summary", "Bootstrap", {"quantity", "value"}, {}, 3};
  summary.rows.push_back({std::string("replicates"), static_cast<long long>(boot.replicates)});
  summary.rows.push_back({std::string("failures"), static_cast<long long>(boot.failures)});
  summary.rows.push_back({std::string("failure_fraction"), boot.failure_fraction()});
  summary.rows.push_back({std::string("alpha"), boot.alpha});
  summary.rows.push_back({std::string("seed"), std::to_string(boot.seed)});
  out.push_back(std::move(summary));

  Report iv{"bootstrap_intervals",
            "Percentile intervals (" + format_csv_number(100.0 * (1.0 - boot.alpha)) + "%)",
            {"parameter", "row", "column", "estimate", "lower", "upper"}, {}, 2};
  const auto implied = implied_coefficients(estimate.params, design);
  for (Index i = 0; i < implied.a.rows(); ++i) {
    for (Index j = 0; j < implied.a.cols(); ++j) {
      iv.rows.push_back({std::string("A"), implied.row_labels[static_cast<std::size_t>(i)],
                         implied.column_labels[static_cast<std::size_t>(j)], implied.a(i, j),
                         boot.implied_lower(i, j), boot.implied_upper(i, j)});
    }
  }
  for (Index t = 0; t < design.w_columns(); ++t) {
    iv.rows.push_back({std::string("b_w"), design.w_labels[static_cast<std::size_t>(t)], std::string("1"),
                       estimate.params.bw(t), boot.intercepts_lower(t), boot.intercepts_upper(t)});
  }
  out.push_back(std::move(iv));
  return out;
}

Report prediction_report(const std::vector<Prediction>& predictions, const std::vector<std::string>& category_labels,
                         const DesignSet& design) {
  Report r{"predictions", "Predicted probabilities", {"row"}, {}, 4};
  r.header.insert(r.header.end(), category_labels.begin(), category_labels.end());
  if (design.coding) {
    for (const auto& name : design.response_names) r.header.push_back("P(" + name + ")");
  }
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    std::vector<Cell> row{static_cast<long long>(i + 1)};
    const auto& p = predictions[i];
    for (Index k = 0; k < p.profile_probabilities.size(); ++k) row.emplace_back(p.profile_probabilities(k));
    for (Index k = 0; k < p.marginal_probabilities.size(); ++k) row.emplace_back(p.marginal_probabilities(k));
    r.rows.push_back(std::move(row));
  }
  return r;
}

}  // namespace mcdm::cli
