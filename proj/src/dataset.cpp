#include "hcqrf/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hcqrf/errors.hpp"

namespace hcqrf {

namespace detail {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  for (auto& f : fields) {
    const auto begin = f.find_first_not_of(" \t");
    const auto end = f.find_last_not_of(" \t");
    f = (begin == std::string::npos) ? std::string() : f.substr(begin, end - begin + 1);
  }
  return fields;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  if (cell.empty()) {
    throw DataError("missing value, row " + std::to_string(row) + ", column '" +
                    column + "'");
  }
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto result = std::from_chars(first, last, value);
  if (result.ec != std::errc() || result.ptr != last) {
    throw DataError("non-numeric cell '" + cell + "', row " + std::to_string(row) +
                    ", column '" + column + "'");
  }
  if (!std::isfinite(value)) {
    throw DataError("non-finite value, row " + std::to_string(row) + ", column '" +
                    column + "'");
  }
  return value;
}

struct HeaderLayout {
  int time = -1;
  int status = -1;
  std::vector<int> x_cols;
  std::vector<int> z_cols;
  std::vector<std::string> names;
};

HeaderLayout parse_header(const std::string& line, const CsvSchema& schema,
                          bool require_outcome) {
  HeaderLayout layout;
  layout.names = split_csv_line(line);
  for (std::size_t j = 0; j < layout.names.size(); ++j) {
    const std::string& name = layout.names[j];
    if (name == schema.time_column) {
      if (layout.time >= 0) throw DataError("duplicate column '" + name + "'");
      layout.time = static_cast<int>(j);
    } else if (name == schema.status_column) {
      if (layout.status >= 0) throw DataError("duplicate column '" + name + "'");
      layout.status = static_cast<int>(j);
    } else if (name.rfind(schema.modifier_prefix, 0) == 0) {
      layout.x_cols.push_back(static_cast<int>(j));
    } else if (name.rfind(schema.predictor_prefix, 0) == 0) {
      layout.z_cols.push_back(static_cast<int>(j));
    } else {
      throw DataError("unrecognized column '" + name + "'");
    }
  }
  if (require_outcome) {
    if (layout.time < 0) throw DataError("missing column '" + schema.time_column + "'");
    if (layout.status < 0) {
      throw DataError("missing column '" + schema.status_column + "'");
    }
  }
  if (layout.x_cols.empty()) {
    throw DataError("no modifier columns (prefix '" + schema.modifier_prefix + "')");
  }
  return layout;
}

std::vector<std::vector<double>> parse_rows(std::ifstream& in,
                                            const HeaderLayout& layout) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row_index;
    const auto fields = split_csv_line(line);
    if (fields.size() != layout.names.size()) {
      throw DataError("row " + std::to_string(row_index) + ": expected " +
                      std::to_string(layout.names.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    std::vector<double> values(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      values[j] = parse_cell(fields[j], row_index, layout.names[j]);
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DataError("no data rows");
  return rows;
}

}  // namespace detail

void SurvivalDataset::validate() const {
  const Eigen::Index rows = n();
  if (rows == 0) throw DataError("empty dataset");
  if (delta.size() != rows || x.rows() != rows || z.rows() != rows) {
    throw DataError("dataset arrays disagree on the number of rows");
  }
  if (p() < 1) throw DataError("at least one modifier column is required");
  if (q() < 1) throw DataError("predictor design must include the intercept");
  if (static_cast<Eigen::Index>(modifier_names.size()) != p() ||
      static_cast<Eigen::Index>(predictor_names.size()) != q()) {
    throw DataError("column names disagree with matrix dimensions");
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::isfinite(y[i])) {
      throw DataError("non-finite time, row " + std::to_string(i + 1));
    }
    if (y[i] < 0.0) throw DataError("negative time, row " + std::to_string(i + 1));
    if (delta[i] != 0 && delta[i] != 1) {
      throw DataError("status must be 0/1, row " + std::to_string(i + 1));
    }
    if (z(i, 0) != 1.0) {
      throw DataError("intercept column must be identically 1, row " +
                      std::to_string(i + 1));
    }
  }
  if (!x.allFinite() || !z.allFinite()) {
    throw DataError("non-finite covariate value");
  }
}

SurvivalDataset load_dataset(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) throw DataError("empty file '" + path + "'");
  const auto layout = detail::parse_header(header, schema, /*require_outcome=*/true);
  const auto rows = detail::parse_rows(in, layout);

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(layout.x_cols.size());
  const Eigen::Index q = static_cast<Eigen::Index>(layout.z_cols.size()) + 1;
  SurvivalDataset data;
  data.y.resize(n);
  data.delta.resize(n);
  data.x.resize(n, p);
  data.z.resize(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    const double time = row[static_cast<std::size_t>(layout.time)];
    if (time < 0.0) throw DataError("negative time, row " + std::to_string(i + 1));
    const double status = row[static_cast<std::size_t>(layout.status)];
    if (status != 0.0 && status != 1.0) {
      throw DataError("status must be 0/1, row " + std::to_string(i + 1));
    }
    data.y[i] = time;
    data.delta[i] = static_cast<int>(status);
    for (Eigen::Index j = 0; j < p; ++j) {
      data.x(i, j) = row[static_cast<std::size_t>(layout.x_cols[j])];
    }
    data.z(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < q; ++j) {
      data.z(i, j) = row[static_cast<std::size_t>(layout.z_cols[j - 1])];
    }
  }
  for (int idx : layout.x_cols) data.modifier_names.push_back(layout.names[idx]);
  data.predictor_names.push_back("intercept");
  for (int idx : layout.z_cols) data.predictor_names.push_back(layout.names[idx]);
  data.validate();
  return data;
}

CovariateTable load_covariates(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) throw DataError("empty file '" + path + "'");
  const auto layout = detail::parse_header(header, schema, /*require_outcome=*/false);
  const auto rows = detail::parse_rows(in, layout);

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(layout.x_cols.size());
  const Eigen::Index q = static_cast<Eigen::Index>(layout.z_cols.size()) + 1;
  CovariateTable table;
  table.x.resize(n, p);
  table.z.resize(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < p; ++j) {
      table.x(i, j) = row[static_cast<std::size_t>(layout.x_cols[j])];
    }
    table.z(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < q; ++j) {
      table.z(i, j) = row[static_cast<std::size_t>(layout.z_cols[j - 1])];
    }
  }
  for (int idx : layout.x_cols) table.modifier_names.push_back(layout.names[idx]);
  table.predictor_names.push_back("intercept");
  for (int idx : layout.z_cols) table.predictor_names.push_back(layout.names[idx]);
  return table;
}

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

void write_dataset_csv(const std::string& path, const SurvivalDataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "time,status";
  for (const auto& name : data.modifier_names) out << ',' << name;
  for (Eigen::Index j = 1; j < data.q(); ++j) out << ',' << data.predictor_names[j];
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_double(data.y[i]) << ',' << data.delta[i];
    for (Eigen::Index j = 0; j < data.p(); ++j) out << ',' << format_double(data.x(i, j));
    for (Eigen::Index j = 1; j < data.q(); ++j) out << ',' << format_double(data.z(i, j));
    out << '\n';
  }
}

void write_covariates_csv(const std::string& path, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& z,
                          const std::vector<std::string>& modifier_names,
                          const std::vector<std::string>& predictor_names) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  bool first = true;
  for (const auto& name : modifier_names) {
    out << (first ? "" : ",") << name;
    first = false;
  }
  for (std::size_t j = 1; j < predictor_names.size(); ++j) out << ',' << predictor_names[j];
  out << '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out << (j == 0 ? "" : ",") << format_double(x(i, j));
    }
    for (Eigen::Index j = 1; j < z.cols(); ++j) out << ',' << format_double(z(i, j));
    out << '\n';
  }
}

}  // namespace hcqrf
