#include "mcdm/select.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <thread>

#include "mcdm/errors.hpp"
#include "mcdm/interpret.hpp"

namespace mcdm {

namespace {

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

// Runs job(i) for i in [0, count). Results are written by index, so the
// outcome does not depend on scheduling.
template <typename Job>
void parallel_for(std::size_t count, unsigned threads, Job job) {
  const unsigned workers = worker_count(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::string join_terms(const TermSet& terms, const std::vector<std::string>& names) {
  std::string out;
  for (const auto& t : terms) {
    if (!out.empty()) out += '+';
    out += format_term(t, names);
  }
  return out.empty() ? "-" : out;
}

std::vector<Candidate> evaluate(const Observations& g, const SelectionData& data,
                                std::vector<ModelSpec> specs, const StepwiseOptions& options) {
  std::vector<Candidate> out(specs.size());
  parallel_for(specs.size(), options.threads, [&](std::size_t i) {
    Candidate& c = out[i];
    c.spec = std::move(specs[i]);
    c.npar = c.spec.parameter_count();
    try {
      const DesignSet design = data.design_for(c.spec);
      const FitResult fit_result = fit(g, design, c.spec.rank, options.fit);
      c.deviance = fit_result.deviance;
      c.aic = aic(fit_result, c.spec);
      c.converged = fit_result.converged;
    } catch (const Error& e) {
      c.feasible = false;
      c.error = e.what();
      c.deviance = std::numeric_limits<double>::quiet_NaN();
      c.aic = std::numeric_limits<double>::infinity();
    }
  });
  return out;
}

SelectionStep run_step(StepKind kind, const Observations& g, const SelectionData& data,
                       std::vector<ModelSpec> specs, const StepwiseOptions& options) {
  // Drop duplicate specs, keeping the first occurrence.
  std::vector<ModelSpec> unique;
  for (auto& s : specs) {
    if (std::find(unique.begin(), unique.end(), s) == unique.end()) unique.push_back(std::move(s));
  }
  SelectionStep step;
  step.kind = kind;
  step.candidates = evaluate(g, data, std::move(unique), options);
  step.chosen = choose_candidate(step.candidates);
  return step;
}

Index capped_rank(Index rank, const ModelSpec& spec) {
  return std::min({rank, static_cast<Index>(spec.x_columns.size()),
                   static_cast<Index>(spec.z_terms.size())});
}

// W built from `w` up to `order`, keeping every Z term so the hierarchy holds.
TermSet w_with_order(const TermSet& w, const TermSet& z, int order) {
  TermSet out;
  for (const auto& t : w) {
    if (static_cast<int>(t.size()) <= order || contains(z, t)) out.push_back(t);
  }
  return out;
}

}  // namespace

Index ModelSpec::parameter_count() const {
  return mcdm::parameter_count(static_cast<Index>(w_terms.size()), rank,
                               static_cast<Index>(x_columns.size()),
                               static_cast<Index>(z_terms.size()));
}

double aic(const FitResult& fit, const ModelSpec& spec) {
  return fit.deviance + 2.0 * static_cast<double>(spec.parameter_count());
}

DesignSet SelectionData::design_for(const ModelSpec& spec) const {
  MatrixXd sub(x.rows(), static_cast<Index>(spec.x_columns.size()));
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < spec.x_columns.size(); ++j) {
    const Index c = spec.x_columns[j];
    if (c < 0 || c >= x.cols()) throw DimensionMismatch("predictor column index out of range");
    sub.col(static_cast<Index>(j)) = x.col(c);
    labels.push_back(x_labels.at(static_cast<std::size_t>(c)));
  }
  return DesignSet::from_profiles(std::move(sub), std::move(labels), coding, spec.z_terms,
                                  spec.w_terms, response_names);
}

std::string SelectionData::terms_label(const TermSet& terms) const {
  return join_terms(terms, response_names);
}

std::string SelectionData::columns_label(const std::vector<Index>& columns) const {
  std::string xs;
  for (Index c : columns) {
    if (!xs.empty()) xs += '+';
    xs += x_labels.at(static_cast<std::size_t>(c));
  }
  return xs.empty() ? "-" : xs;
}

std::string SelectionData::describe(const ModelSpec& spec) const {
  return "S=" + std::to_string(spec.rank) + " Z=" + terms_label(spec.z_terms) +
         " X=" + columns_label(spec.x_columns) + " W=" + terms_label(spec.w_terms);
}

std::string to_string(StepKind kind) {
  switch (kind) {
    case StepKind::dimensionality: return "dimensionality";
    case StepKind::z_structure: return "z-structure";
    case StepKind::x_structure: return "x-structure";
    case StepKind::w_structure: return "w-structure";
  }
  return "unknown";
}

std::size_t choose_candidate(const std::vector<Candidate>& candidates) {
  if (candidates.empty()) throw InvalidOptions("no candidates to choose from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const auto& b = candidates[best];
    if (!c.feasible) continue;
    if (!b.feasible) {
      best = i;
      continue;
    }
    const double tie = 1e-9 * std::max(1.0, std::abs(b.aic));
    if (c.aic < b.aic - tie || (std::abs(c.aic - b.aic) <= tie && c.npar < b.npar)) best = i;
  }
  return best;
}

SelectionResult stepwise(const Observations& g, const SelectionData& data, const ModelSpec& full,
                         const StepwiseOptions& options) {
  {
    const auto report = validate_hierarchy(full.z_terms, full.w_terms);
    if (!report.ok) throw HierarchyViolation("full specification violates Z within W");
    data.design_for(full);  // rank checks
  }
  SelectionResult result;
  ModelSpec current = full;

  if (options.select_rank) {
    std::vector<ModelSpec> specs;
    std::vector<Index> ranks;
    if (options.rank_candidates) {
      ranks = *options.rank_candidates;
    } else {
      const Index limit = std::min(static_cast<Index>(full.x_columns.size()),
                                   static_cast<Index>(full.z_terms.size()));
      for (Index s = 0; s <= limit; ++s) ranks.push_back(s);
    }
    for (Index s : ranks) {
      ModelSpec spec = full;
      spec.rank = s;
      specs.push_back(std::move(spec));
    }
    result.steps.push_back(run_step(StepKind::dimensionality, g, data, std::move(specs), options));
    current = result.steps.back().best().spec;
  }

  if (options.select_z) {
    const Index rank = current.rank;
    const int top = max_order(current.z_terms);
    std::vector<ModelSpec> specs;
    for (int order = top; order >= 1; --order) {
      ModelSpec spec = current;
      spec.z_terms = terms_up_to_order(current.z_terms, order);
      spec.rank = capped_rank(rank, spec);
      specs.push_back(std::move(spec));
    }
    result.steps.push_back(run_step(StepKind::z_structure, g, data, std::move(specs), options));
    const Candidate base = result.steps.back().best();
    current = base.spec;

    // Re-add single next-order terms, then all improving ones together.
    const int base_order = max_order(base.spec.z_terms);
    std::vector<Term> additions;
    for (const auto& t : full.z_terms) {
      if (static_cast<int>(t.size()) == base_order + 1 && !contains(base.spec.z_terms, t)) {
        additions.push_back(t);
      }
    }
    if (!additions.empty()) {
      std::vector<ModelSpec> specs2{base.spec};
      for (const auto& t : additions) {
        ModelSpec spec = base.spec;
        spec.z_terms.push_back(t);
        spec.rank = capped_rank(rank, spec);
        specs2.push_back(std::move(spec));
      }
      auto step = run_step(StepKind::z_structure, g, data, std::move(specs2), options);
      std::vector<Term> improving;
      for (std::size_t i = 1; i < step.candidates.size(); ++i) {
        const auto& c = step.candidates[i];
        if (c.feasible && c.aic < base.aic) improving.push_back(c.spec.z_terms.back());
      }
      if (improving.size() >= 2) {
        ModelSpec combined = base.spec;
        combined.z_terms.insert(combined.z_terms.end(), improving.begin(), improving.end());
        combined.rank = capped_rank(rank, combined);
        auto extra = evaluate(g, data, {combined}, options);
        step.candidates.push_back(std::move(extra.front()));
        step.chosen = choose_candidate(step.candidates);
      }
      result.steps.push_back(std::move(step));
      current = result.steps.back().best().spec;
    }
  }

  if (options.select_x) {
    for (;;) {
      std::vector<ModelSpec> specs{current};
      if (current.x_columns.size() > 1) {
        for (std::size_t j = 0; j < current.x_columns.size(); ++j) {
          const Index col = current.x_columns[j];
          if (col < static_cast<Index>(data.forced.size()) && data.forced[static_cast<std::size_t>(col)]) continue;
          ModelSpec spec = current;
          spec.x_columns.erase(spec.x_columns.begin() + static_cast<std::ptrdiff_t>(j));
          spec.rank = capped_rank(current.rank, spec);
          specs.push_back(std::move(spec));
        }
      }
      if (specs.size() == 1) break;
      result.steps.push_back(run_step(StepKind::x_structure, g, data, std::move(specs), options));
      const auto& step = result.steps.back();
      if (step.chosen == 0) break;
      current = step.best().spec;
    }
  }

  if (options.select_w) {
    std::vector<ModelSpec> specs;
    for (int order = max_order(current.w_terms); order >= 1; --order) {
      ModelSpec spec = current;
      spec.w_terms = w_with_order(current.w_terms, current.z_terms, order);
      specs.push_back(std::move(spec));
    }
    result.steps.push_back(run_step(StepKind::w_structure, g, data, std::move(specs), options));
    current = result.steps.back().best().spec;
  }

  result.final_spec = current;
  return result;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BootstrapResult bootstrap(const Observations& g, const DesignSet& design, Index rank,
                          Index replicates, double alpha, std::uint64_t seed,
                          const FitOptions& options, unsigned threads) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidLevel("bootstrap level must lie in (0, 1), got " + std::to_string(alpha));
  }
  if (replicates < 1) throw InvalidOptions("need at least one bootstrap replicate");
  const Index n = g.size();
  FitOptions quiet = options;
  quiet.trace = false;

  struct Replicate {
    bool ok = false;
    MatrixXd implied;
    VectorXd intercepts;
  };
  std::vector<Replicate> reps(static_cast<std::size_t>(replicates));
  parallel_for(reps.size(), threads, [&](std::size_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(b)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = pick(rng);
    try {
      const DesignSet resampled = design.with_x(design.x(rows, Eigen::all), design.x_labels);
      const FitResult f = fit(g.subset(rows), resampled, rank, quiet);
      reps[b].implied = implied_coefficients(f.params, resampled).a;
      reps[b].intercepts = f.params.bw;
      reps[b].ok = true;
    } catch (const Error&) {
      reps[b].ok = false;
    }
  });

  BootstrapResult out;
  out.alpha = alpha;
  out.seed = seed;
  out.replicates = replicates;
  for (auto& r : reps) {
    if (!r.ok) {
      ++out.failures;
      continue;
    }
    out.implied.push_back(std::move(r.implied));
    out.intercepts.push_back(std::move(r.intercepts));
  }
  if (out.implied.empty()) throw Diverged("every bootstrap replicate failed to fit");

  const Index p = design.predictors();
  const Index q = design.z_columns();
  const Index t = design.w_columns();
  out.implied_lower.resize(p, q);
  out.implied_upper.resize(p, q);
  std::vector<double> cell(out.implied.size());
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < q; ++j) {
      for (std::size_t b = 0; b < out.implied.size(); ++b) cell[b] = out.implied[b](i, j);
      out.implied_lower(i, j) = quantile(cell, alpha / 2.0);
      out.implied_upper(i, j) = quantile(cell, 1.0 - alpha / 2.0);
    }
  }
  out.intercepts_lower.resize(t);
  out.intercepts_upper.resize(t);
  for (Index j = 0; j < t; ++j) {
    for (std::size_t b = 0; b < out.intercepts.size(); ++b) cell[b] = out.intercepts[b](j);
    out.intercepts_lower(j) = quantile(cell, alpha / 2.0);
    out.intercepts_upper(j) = quantile(cell, 1.0 - alpha / 2.0);
  }
  return out;
}

}  // namespace mcdm
