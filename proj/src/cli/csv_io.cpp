#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "calppi/cli.hpp"
#include "calppi/errors.hpp"

namespace calppi::cli {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<Vector> columns;
  std::size_t rows = 0;
};

// Reads the named columns of a numeric CSV.
Table read_columns(std::istream& in, const std::string& source,
                   const std::vector<std::string>& wanted) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::vector<std::string>> header;
  while (!header && std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    header.emplace();
    for (auto cell : split(line)) header->emplace_back(cell);
  }
  if (!header) throw DataError(source + ": file is empty (missing header row)");

  std::vector<std::size_t> positions;
  for (const std::string& name : wanted) {
    auto it = std::find(header->begin(), header->end(), name);
    if (it == header->end()) throw DataError(source + ": missing column '" + name + "'");
    positions.push_back(static_cast<std::size_t>(it - header->begin()));
  }

  Table table;
  table.header = *header;
  table.columns.resize(wanted.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header->size()) {
      throw DataError(source + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(header->size()));
    }
    for (std::size_t c = 0; c < positions.size(); ++c) {
      const std::string_view cell = cells[positions[c]];
      double value = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto res = std::from_chars(first, last, value);
      if (cell.empty() || res.ec != std::errc() || res.ptr != last) {
        throw DataError(source + ": line " + std::to_string(line_no) + ": cannot parse '" +
                        std::string(cell) + "' in column '" + wanted[c] + "'");
      }
      table.columns[c].push_back(value);
    }
    ++table.rows;
  }
  return table;
}

std::optional<Matrix> gather_covariates(const Table& t, std::size_t first_col, std::size_t d) {
  if (d == 0) return std::nullopt;
  Matrix m(static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < t.rows; ++i) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.columns[first_col + j][i];
    }
  }
  return m;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

void write_covariate_header(std::ostream& out, const std::vector<std::string>& names) {
  for (const auto& name : names) out << ',' << name;
}

void write_covariate_row(std::ostream& out, const std::optional<Matrix>& cov, std::size_t i) {
  if (!cov) return;
  for (Eigen::Index j = 0; j < cov->cols(); ++j) {
    out << ',' << format_double((*cov)(static_cast<Eigen::Index>(i), j));
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

LabeledSample read_labeled_csv(std::istream& in, const std::string& source,
                               const std::vector<std::string>& covariate_columns) {
  std::vector<std::string> wanted = {"y", "score"};
  wanted.insert(wanted.end(), covariate_columns.begin(), covariate_columns.end());
  Table t = read_columns(in, source, wanted);
  LabeledSample sample;
  sample.outcomes = std::move(t.columns[0]);
  sample.scores = std::move(t.columns[1]);
  sample.covariates = gather_covariates(t, 2, covariate_columns.size());
  return sample;
}

UnlabeledSample read_unlabeled_csv(std::istream& in, const std::string& source,
                                   const std::vector<std::string>& covariate_columns) {
  std::vector<std::string> wanted = {"score"};
  wanted.insert(wanted.end(), covariate_columns.begin(), covariate_columns.end());
  Table t = read_columns(in, source, wanted);
  UnlabeledSample sample;
  sample.scores = std::move(t.columns[0]);
  sample.covariates = gather_covariates(t, 1, covariate_columns.size());
  return sample;
}

LabeledSample read_labeled_csv(const std::string& path,
                               const std::vector<std::string>& covariate_columns) {
  auto in = open(path);
  return read_labeled_csv(in, path, covariate_columns);
}

UnlabeledSample read_unlabeled_csv(const std::string& path,
                                   const std::vector<std::string>& covariate_columns) {
  auto in = open(path);
  return read_unlabeled_csv(in, path, covariate_columns);
}

void write_labeled_csv(std::ostream& out, const LabeledSample& sample,
                       const std::vector<std::string>& covariate_columns) {
  out << "y,score";
  write_covariate_header(out, covariate_columns);
  out << '\n';
  for (std::size_t i = 0; i < sample.size(); ++i) {
    out << format_double(sample.outcomes[i]) << ',' << format_double(sample.scores[i]);
    write_covariate_row(out, sample.covariates, i);
    out << '\n';
  }
}

void write_unlabeled_csv(std::ostream& out, const UnlabeledSample& sample,
                         const std::vector<std::string>& covariate_columns) {
  out << "score";
  write_covariate_header(out, covariate_columns);
  out << '\n';
  for (std::size_t i = 0; i < sample.size(); ++i) {
    out << format_double(sample.scores[i]);
    write_covariate_row(out, sample.covariates, i);
    out << '\n';
  }
}

}  // namespace calppi::cli
