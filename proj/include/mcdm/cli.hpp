#ifndef MCDM_CLI_HPP
#define MCDM_CLI_HPP

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mcdm/design.hpp"
#include "mcdm/fitter.hpp"
#include "mcdm/model.hpp"

namespace mcdm::cli {

// Delimited text with a header row. Cells are kept as strings.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row
  std::string source;              // for diagnostics

  std::size_t column(std::string_view name) const;  // throws ConfigError
};

// RFC 4180-style quoting; blank lines are skipped. Throws ParseError with the
// line and column of ragged rows, unterminated quotes and empty cells.
Table read_delimited(std::istream& in, char delimiter = ',', std::string source = "<input>");
Table read_delimited_file(const std::filesystem::path& path, char delimiter = ',');

struct ResponseDecl {
  std::string column;
  std::string name;  // short name used in term labels; defaults to the column
  std::string high;
  std::string low;
};

struct PredictorDecl {
  std::string column;
  Directive directive = Directive::passthrough;
  bool forced = false;
  // Label -> number for non-numeric columns.
  std::map<std::string, double> codes;
};

enum class Mode { profile, category };

struct ModelConfig {
  Mode mode = Mode::profile;
  char delimiter = ',';
  std::vector<ResponseDecl> responses;  // profile mode
  std::string category_column;          // category mode
  std::optional<std::filesystem::path> z_matrix;
  std::optional<std::filesystem::path> w_matrix;
  std::vector<std::string> z_terms;
  std::vector<std::string> w_terms;
  std::vector<PredictorDecl> predictors;
  Index rank = 0;
  FitOptions fit;
};

// JSON config; relative matrix paths resolve against base_dir.
ModelConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ModelConfig load_config(const std::filesystem::path& path);

struct Ingested {
  Observations outcomes;
  DesignSet design;
  EncodedPredictors predictors;
  // Profile labels such as "A+C-M+" or the sorted category labels.
  std::vector<std::string> category_labels;
  std::vector<bool> forced;
};

Ingested ingest(const Table& data, const ModelConfig& config);

// Encodes the predictor columns of new rows with the transforms learned at
// ingestion.
MatrixXd encode_rows(const Table& data, const ModelConfig& config, const EncodedPredictors& fitted);

// A rectangular report. Numbers print with `decimals` places as text and 12
// significant digits as CSV; NaN prints as "-" and "NA".
using Cell = std::variant<std::string, double, long long>;

struct Report {
  std::string name;  // CSV file stem
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
  int decimals = 2;
};

std::string format_csv_number(double value);
void render_text(const Report& report, std::ostream& out);
void write_csv(const Report& report, std::ostream& out);
void write_csv(const Report& report, const std::filesystem::path& dir);

// Parses a numeric CSV cell as written by write_csv ("NA" is NaN).
double parse_number(std::string_view text);

// Entry point shared by the executable and the tests. args excludes argv[0].
// Returns 0 on success; errors print one diagnostic line to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcdm::cli

#endif  // MCDM_CLI_HPP
