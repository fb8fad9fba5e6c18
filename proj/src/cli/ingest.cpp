#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mcdm/cli.hpp"
#include "mcdm/errors.hpp"

namespace mcdm::cli {

namespace {

using nlohmann::json;

std::string where(const std::string& source, std::size_t line, std::size_t col) {
  return source + ":" + std::to_string(line) + ":" + std::to_string(col);
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view what) {
  if (!obj.is_object()) throw ConfigError(std::string(what) + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(what));
    }
  }
}

template <typename T>
T get_as(const json& obj, const char* key, std::string_view what) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + "." + key + ": " + e.what());
  }
}

MatrixXd mask_from_json(const json& rows, const char* name) {
  if (!rows.is_array() || rows.empty()) throw ConfigError(std::string("fit.masks.") + name + " must be a non-empty array of rows");
  const std::size_t cols = rows.front().size();
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != cols) {
      throw ConfigError(std::string("fit.masks.") + name + " rows must have equal length");
    }
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j].get<double>();
  }
  return m;
}

FitOptions parse_fit(const json& j) {
  check_keys(j, {"max_iterations", "tolerance", "step", "scheme", "masks"}, "fit");
  FitOptions o;
  if (j.contains("max_iterations")) o.max_iterations = get_as<int>(j, "max_iterations", "fit");
  if (j.contains("tolerance")) o.tolerance = get_as<double>(j, "tolerance", "fit");
  if (j.contains("step")) o.step = get_as<double>(j, "step", "fit");
  if (j.contains("scheme")) {
    try {
      o.scheme = parse_update_scheme(get_as<std::string>(j, "scheme", "fit"));
    } catch (const Error& e) {
      throw ConfigError(std::string("fit.scheme: ") + e.what());
    }
  }
  if (j.contains("masks")) {
    const auto& m = j.at("masks");
    check_keys(m, {"bx", "bz"}, "fit.masks");
    if (!m.contains("bx") || !m.contains("bz")) throw ConfigError("fit.masks needs both bx and bz");
    o.masks = ConstraintMasks{mask_from_json(m.at("bx"), "bx"), mask_from_json(m.at("bz"), "bz")};
  }
  return o;
}

double parse_cell(const Table& t, std::size_t row, std::size_t col) {
  const std::string& s = t.rows[row][col];
  try {
    return parse_number(s);
  } catch (const ParseError&) {
    throw ParseError(where(t.source, t.lines[row], col + 1) + ": expected a number in column '" +
                     t.header[col] + "', got '" + s + "'");
  }
}

std::vector<PredictorColumn> raw_predictors(const Table& data, const ModelConfig& config) {
  std::vector<PredictorColumn> out;
  for (const auto& decl : config.predictors) {
    const std::size_t c = data.column(decl.column);
    PredictorColumn pc;
    pc.name = decl.column;
    pc.directive = decl.directive;
    pc.values.reserve(data.rows.size());
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
      if (decl.codes.empty()) {
        pc.values.push_back(parse_cell(data, i, c));
        continue;
      }
      const auto it = decl.codes.find(data.rows[i][c]);
      if (it == decl.codes.end()) {
        throw UnknownLabel("row " + std::to_string(i + 1) + " (" + where(data.source, data.lines[i], c + 1) +
                           "): value '" + data.rows[i][c] + "' of predictor '" + decl.column +
                           "' has no code");
      }
      pc.values.push_back(it->second);
    }
    out.push_back(std::move(pc));
  }
  return out;
}

// Reads a K-row matrix keyed by category label in its first column and
// returns it in `order`.
std::pair<MatrixXd, std::vector<std::string>> read_category_matrix(const std::filesystem::path& path,
                                                                   char delimiter,
                                                                   const std::vector<std::string>& order) {
  const Table t = read_delimited_file(path, delimiter);
  if (t.header.size() < 2) throw ConfigError(path.string() + ": needs a label column and at least one value column");
  std::vector<std::string> labels(t.header.begin() + 1, t.header.end());
  MatrixXd m(static_cast<Index>(order.size()), static_cast<Index>(labels.size()));
  std::vector<bool> seen(order.size(), false);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto it = std::find(order.begin(), order.end(), t.rows[i][0]);
    if (it == order.end()) {
      throw UnknownLabel(where(t.source, t.lines[i], 1) + ": category '" + t.rows[i][0] +
                         "' does not occur in the data");
    }
    const auto k = static_cast<std::size_t>(it - order.begin());
    if (seen[k]) throw ConfigError(where(t.source, t.lines[i], 1) + ": duplicate category '" + t.rows[i][0] + "'");
    seen[k] = true;
    for (std::size_t j = 1; j < t.header.size(); ++j) {
      m(static_cast<Index>(k), static_cast<Index>(j - 1)) = parse_cell(t, i, j);
    }
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!seen[k]) throw ConfigError(path.string() + ": no row for category '" + order[k] + "'");
  }
  return {std::move(m), std::move(labels)};
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError(source + ": no column named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double parse_number(std::string_view text) {
  if (text == "NA" || text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ParseError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

Table read_delimited(std::istream& in, char delimiter, std::string source) {
  Table t;
  t.source = std::move(source);
  std::vector<std::string> record;
  std::string field;
  std::size_t line = 1, col = 1;
  std::size_t record_line = 1;
  bool in_quotes = false, quoted = false, any = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty() && !any;
    if (!blank) {
      for (std::size_t j = 0; j < record.size(); ++j) {
        if (record[j].empty()) {
          throw ParseError(where(t.source, record_line, j + 1) + ": empty cell");
        }
      }
      if (t.header.empty()) {
        t.header = std::move(record);
      } else {
        if (record.size() != t.header.size()) {
          throw ParseError(where(t.source, record_line, std::min(record.size(), t.header.size()) + 1) +
                           ": expected " + std::to_string(t.header.size()) + " fields, found " +
                           std::to_string(record.size()));
        }
        t.rows.push_back(std::move(record));
        t.lines.push_back(record_line);
      }
    }
    record.clear();
    any = false;
  };

  char ch;
  std::size_t quote_line = 0, quote_col = 0;
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field += '"';
          ++col;
        } else {
          in_quotes = false;
        }
      } else {
        field += ch;
        if (ch == '\n') {
          ++line;
          col = 0;
        }
      }
      ++col;
      continue;
    }
    if (ch == '\r') continue;
    if (ch == '\n') {
      end_record();
      ++line;
      col = 1;
      record_line = line;
      continue;
    }
    any = true;
    if (ch == delimiter) {
      end_field();
    } else if (ch == '"' && field.empty() && !quoted) {
      in_quotes = quoted = true;
      quote_line = line;
      quote_col = col;
    } else {
      if (quoted) throw ParseError(where(t.source, line, col) + ": text after closing quote");
      field += ch;
    }
    ++col;
  }
  if (in_quotes) throw ParseError(where(t.source, quote_line, quote_col) + ": unterminated quote");
  if (any || !field.empty() || !record.empty()) end_record();
  if (t.header.empty()) throw ParseError(t.source + ":1:1: missing header row");
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      if (t.header[j] == t.header[k]) {
        throw ParseError(where(t.source, 1, j + 1) + ": duplicate column name '" + t.header[j] + "'");
      }
    }
  }
  return t;
}

Table read_delimited_file(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  return read_delimited(in, delimiter, path.string());
}

ModelConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError("config " + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
  check_keys(j, {"mode", "delimiter", "responses", "category", "z_terms", "w_terms", "predictors", "rank", "fit"},
             "config");

  ModelConfig c;
  const std::string mode = j.value("mode", std::string("profile"));
  if (mode == "profile") {
    c.mode = Mode::profile;
  } else if (mode == "category") {
    c.mode = Mode::category;
  } else {
    throw ConfigError("mode must be 'profile' or 'category', got '" + mode + "'");
  }
  if (j.contains("delimiter")) {
    const auto d = get_as<std::string>(j, "delimiter", "config");
    if (d == "\\t") {
      c.delimiter = '\t';
    } else if (d.size() == 1 && d[0] != '"' && d[0] != '\n') {
      c.delimiter = d[0];
    } else {
      throw ConfigError("delimiter must be a single character");
    }
  }

  if (c.mode == Mode::profile) {
    if (!j.contains("responses") || !j.at("responses").is_array() || j.at("responses").empty()) {
      throw ConfigError("profile mode needs a non-empty 'responses' array");
    }
    for (const auto& r : j.at("responses")) {
      check_keys(r, {"column", "name", "high", "low"}, "responses[]");
      ResponseDecl d;
      d.column = get_as<std::string>(r, "column", "responses[]");
      d.name = r.value("name", d.column);
      d.high = get_as<std::string>(r, "high", "responses[]");
      d.low = get_as<std::string>(r, "low", "responses[]");
      if (d.high == d.low) throw ConfigError("response '" + d.column + "' has identical high and low labels");
      c.responses.push_back(std::move(d));
    }
    if (c.responses.size() > 16) throw ConfigError("at most 16 binary responses are supported");
    const auto mains = [&] {
      std::vector<std::string> m;
      for (std::size_t r = 1; r <= c.responses.size(); ++r) m.push_back(std::to_string(r));
      return m;
    }();
    c.z_terms = j.contains("z_terms") ? get_as<std::vector<std::string>>(j, "z_terms", "config") : mains;
    c.w_terms = j.contains("w_terms") ? get_as<std::vector<std::string>>(j, "w_terms", "config") : mains;
  } else {
    if (!j.contains("category")) throw ConfigError("category mode needs a 'category' object");
    const auto& cat = j.at("category");
    check_keys(cat, {"column", "z_matrix", "w_matrix"}, "category");
    c.category_column = get_as<std::string>(cat, "column", "category");
    if (cat.contains("z_matrix")) c.z_matrix = base_dir / get_as<std::string>(cat, "z_matrix", "category");
    if (cat.contains("w_matrix")) c.w_matrix = base_dir / get_as<std::string>(cat, "w_matrix", "category");
    if (j.contains("z_terms") || j.contains("w_terms")) {
      throw ConfigError("z_terms/w_terms apply to profile mode; use category.z_matrix/w_matrix");
    }
  }

  if (!j.contains("predictors") || !j.at("predictors").is_array() || j.at("predictors").empty()) {
    throw ConfigError("config needs a non-empty 'predictors' array");
  }
  for (const auto& p : j.at("predictors")) {
    check_keys(p, {"column", "directive", "forced", "codes"}, "predictors[]");
    PredictorDecl d;
    d.column = get_as<std::string>(p, "column", "predictors[]");
    if (p.contains("directive")) {
      try {
        d.directive = parse_directive(get_as<std::string>(p, "directive", "predictors[]"));
      } catch (const Error& e) {
        throw ConfigError("predictor '" + d.column + "': " + e.what());
      }
    }
    d.forced = p.value("forced", false);
    if (p.contains("codes")) d.codes = get_as<std::map<std::string, double>>(p, "codes", "predictors[]");
    c.predictors.push_back(std::move(d));
  }

  c.rank = j.contains("rank") ? get_as<Index>(j, "rank", "config") : 0;
  if (c.rank < 0) throw ConfigError("rank must be nonnegative");
  if (j.contains("fit")) c.fit = parse_fit(j.at("fit"));
  return c;
}

ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

Ingested ingest(const Table& data, const ModelConfig& config) {
  if (data.rows.size() < 2) throw ConfigError(data.source + ": need at least two data rows");
  Ingested out;
  const Index n = static_cast<Index>(data.rows.size());

  std::vector<std::string> names;
  std::vector<Index> categories(static_cast<std::size_t>(n));
  std::optional<ProfileCoding> coding;
  if (config.mode == Mode::profile) {
    const int r_count = static_cast<int>(config.responses.size());
    coding.emplace(r_count);
    std::vector<std::size_t> cols;
    for (const auto& r : config.responses) {
      cols.push_back(data.column(r.column));
      names.push_back(r.name);
    }
    std::vector<bool> high(static_cast<std::size_t>(r_count));
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
      for (int r = 0; r < r_count; ++r) {
        const auto& decl = config.responses[static_cast<std::size_t>(r)];
        const std::string& v = data.rows[i][cols[static_cast<std::size_t>(r)]];
        if (v == decl.high) {
          high[static_cast<std::size_t>(r)] = true;
        } else if (v == decl.low) {
          high[static_cast<std::size_t>(r)] = false;
        } else {
          throw UnknownLabel("row " + std::to_string(i + 1) + " (" +
                             where(data.source, data.lines[i], cols[static_cast<std::size_t>(r)] + 1) +
                             "): response '" + decl.column + "' has label '" + v + "', expected '" +
                             decl.high + "' or '" + decl.low + "'");
        }
      }
      categories[i] = coding->index_of(high);
    }
    for (Index k = 0; k < coding->profiles(); ++k) {
      std::string label;
      for (int r = 1; r <= r_count; ++r) {
        label += names[static_cast<std::size_t>(r - 1)] + (coding->is_high(k, r) ? "+" : "-");
      }
      out.category_labels.push_back(std::move(label));
    }
  } else {
    const std::size_t c = data.column(config.category_column);
    std::set<std::string> distinct;
    for (const auto& row : data.rows) distinct.insert(row[c]);
    if (distinct.size() < 2) throw ConfigError("category column '" + config.category_column + "' has fewer than two labels");
    out.category_labels.assign(distinct.begin(), distinct.end());
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
      const auto it = std::lower_bound(out.category_labels.begin(), out.category_labels.end(), data.rows[i][c]);
      categories[i] = static_cast<Index>(it - out.category_labels.begin());
    }
  }
  const Index k_count = static_cast<Index>(out.category_labels.size());
  out.outcomes = Observations(std::move(categories), k_count);

  out.predictors = encode_predictors(raw_predictors(data, config));
  for (const auto& p : config.predictors) out.forced.push_back(p.forced);

  if (config.mode == Mode::profile) {
    TermSet z, w;
    try {
      z = parse_terms(config.z_terms);
      w = parse_terms(config.w_terms);
    } catch (const Error& e) {
      throw ConfigError(std::string("term list: ") + e.what());
    }
    out.design = DesignSet::from_profiles(out.predictors.x, out.predictors.labels, *coding, std::move(z),
                                          std::move(w), names);
  } else {
    const auto& labels = out.category_labels;
    std::vector<std::string> default_labels(labels.begin(), labels.end() - 1);
    auto [z, z_labels] = config.z_matrix
                             ? read_category_matrix(*config.z_matrix, config.delimiter, labels)
                             : std::pair{deviation_contrasts(k_count), default_labels};
    auto [w, w_labels] = config.w_matrix
                             ? read_category_matrix(*config.w_matrix, config.delimiter, labels)
                             : std::pair{deviation_contrasts(k_count), default_labels};
    out.design = DesignSet::from_matrices(out.predictors.x, out.predictors.labels, std::move(z),
                                          std::move(z_labels), std::move(w), std::move(w_labels));
  }
  return out;
}

MatrixXd encode_rows(const Table& data, const ModelConfig& config, const EncodedPredictors& fitted) {
  const auto raw = raw_predictors(data, config);
  MatrixXd x(static_cast<Index>(data.rows.size()), static_cast<Index>(raw.size()));
  std::vector<double> row(raw.size());
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    for (std::size_t j = 0; j < raw.size(); ++j) row[j] = raw[j].values[i];
    x.row(static_cast<Index>(i)) = fitted.encode_row(row).transpose();
  }
  return x;
}

}  // namespace mcdm::cli
