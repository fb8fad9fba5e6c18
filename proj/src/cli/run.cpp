#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>

#include "mcdm/errors.hpp"
#include "reports.hpp"

namespace mcdm::cli {

namespace {

struct Args {
  std::string data;
  std::string config;
  std::string out_dir;
  std::string command;
  std::string newdata;
  std::uint64_t seed = 1;
  Index replicates = 200;
  double level = 0.05;
  bool trace = false;
  unsigned threads = 0;
};

void emit(const std::vector<Report>& reports, const Args& args, std::ostream& out) {
  for (const auto& r : reports) render_text(r, out);
  if (args.out_dir.empty()) return;
  std::filesystem::create_directories(args.out_dir);
  for (const auto& r : reports) write_csv(r, std::filesystem::path(args.out_dir));
}

FitResult fit_traced(const Ingested& in, const ModelConfig& config, const Args& args, std::ostream& err) {
  FitOptions options = config.fit;
  options.trace = args.trace;
  options.trace_stream = &err;
  FitResult result = fit(in.outcomes, in.design, config.rank, options);
  if (args.trace && !args.out_dir.empty()) {
    std::filesystem::create_directories(args.out_dir);
    std::ofstream trace(std::filesystem::path(args.out_dir) / "trace.tsv");
    write_trace(trace, result.trace);
  }
  return result;
}

int execute(const Args& args, std::ostream& out, std::ostream& err) {
  const ModelConfig config = load_config(args.config);
  const Table table = read_delimited_file(args.data, config.delimiter);
  const Ingested in = ingest(table, config);

  if (args.command == "fit") {
    const FitResult result = fit_traced(in, config, args, err);
    emit(fit_reports(result, in.design, config.fit), args, out);
  } else if (args.command == "select") {
    if (!in.design.coding) throw ConfigError("select works on binary response profiles (mode \"profile\")");
    SelectionData data{in.predictors.x, in.predictors.labels, *in.design.coding, in.design.response_names,
                       in.forced};
    ModelSpec full;
    full.rank = config.rank;
    full.z_terms = in.design.z_terms;
    full.w_terms = in.design.w_terms;
    for (Index j = 0; j < in.design.predictors(); ++j) full.x_columns.push_back(j);
    StepwiseOptions options;
    options.fit = config.fit;
    options.fit.trace = false;
    options.threads = args.threads;
    const SelectionResult result = stepwise(in.outcomes, data, full, options);
    Report final_spec{"selected_model", "Selected model", {"quantity", "value"}, {}, 2};
    final_spec.rows.push_back({std::string("S"), static_cast<long long>(result.final_spec.rank)});
    final_spec.rows.push_back({std::string("Z"), data.terms_label(result.final_spec.z_terms)});
    final_spec.rows.push_back({std::string("X"), data.columns_label(result.final_spec.x_columns)});
    final_spec.rows.push_back({std::string("W"), data.terms_label(result.final_spec.w_terms)});
    final_spec.rows.push_back({std::string("AIC"), result.steps.empty() ? std::nan("") : result.steps.back().best().aic});
    emit({selection_report(result, data), final_spec}, args, out);
  } else if (args.command == "bootstrap") {
    if (!(args.level > 0.0 && args.level < 0.5)) {
      throw InvalidLevel("--level is the two-sided alpha and must lie in (0, 0.5); 0.1 gives 90% intervals");
    }
    const FitResult estimate = fit_traced(in, config, args, err);
    const BootstrapResult boot = bootstrap(in.outcomes, in.design, config.rank, args.replicates, args.level,
                                           args.seed, config.fit, args.threads);
    emit(bootstrap_reports(boot, estimate, in.design), args, out);
  } else {  // predict
    const FitResult result = fit_traced(in, config, args, err);
    MatrixXd x = in.design.x;
    if (!args.newdata.empty()) x = encode_rows(read_delimited_file(args.newdata, config.delimiter), config, in.predictors);
    std::vector<Prediction> predictions;
    predictions.reserve(static_cast<std::size_t>(x.rows()));
    for (Index i = 0; i < x.rows(); ++i) predictions.push_back(predict(result, in.design, x.row(i).transpose()));
    emit({prediction_report(predictions, in.category_labels, in.design)}, args, out);
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fit multinomial canonical decomposition models", "mcdm"};
  Args args;
  app.add_option("--data", args.data, "Delimited data file with a header row")->required();
  app.add_option("--config", args.config, "JSON model configuration")->required();
  app.add_option("--command", args.command, "What to run")
      ->required()
      ->check(CLI::IsMember({"fit", "select", "bootstrap", "predict"}));
  app.add_option("--out", args.out_dir, "Directory for CSV reports");
  app.add_option("--seed", args.seed, "Bootstrap seed");
  app.add_option("--replicates", args.replicates, "Bootstrap replicates")->check(CLI::PositiveNumber);
  app.add_option("--level", args.level, "Two-sided alpha for bootstrap intervals");
  app.add_flag("--trace", args.trace, "Print iteration<TAB>deviance lines to stderr");
  app.add_option("--newdata", args.newdata, "Rows to predict (default: the fitted data)");
  app.add_option("--threads", args.threads, "Worker threads for select/bootstrap (0 = all cores)");

  try {
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    return execute(args, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace mcdm::cli
