#include "pmax/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace pmax {

std::string Dataset::theta_name(ModelIndex i) const {
  if (i >= 1 && static_cast<std::size_t>(i) <= theta_names.size()) {
    return theta_names[static_cast<std::size_t>(i - 1)];
  }
  return "x" + std::to_string(i);
}

namespace {

void strip_eol(std::string& s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    std::size_t b = f.find_first_not_of(" \t");
    std::size_t e = f.find_last_not_of(" \t");
    f = (b == std::string::npos) ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  const char* s = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (cell.empty() || end == s || *end != '\0' || !std::isfinite(v)) {
    throw ParseError("malformed numeric cell at row " + std::to_string(row) + ", column '" +
                     col + "': '" + cell + "'");
  }
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  if (schema.response.empty()) throw SchemaError("schema names no response column");
  if (!schema.test_all_remaining && schema.test.empty()) {
    throw SchemaError("schema names no test columns");
  }

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("'" + path + "' is empty");
  strip_eol(line);
  const std::vector<std::string> header = split_line(line);

  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j].empty()) {
      throw SchemaError("empty header name in column " + std::to_string(j + 1));
    }
    if (!pos.emplace(header[j], j).second) {
      throw SchemaError("duplicate column '" + header[j] + "' in header");
    }
  }

  auto locate = [&](const std::string& name, const char* role) {
    auto it = pos.find(name);
    if (it == pos.end()) {
      throw SchemaError(std::string(role) + " column '" + name + "' not found in '" + path + "'");
    }
    return it->second;
  };

  const std::size_t y_col = locate(schema.response, "response");
  std::vector<std::size_t> delta_cols, theta_cols;
  for (const auto& name : schema.nuisance) delta_cols.push_back(locate(name, "nuisance"));
  if (schema.test_all_remaining) {
    std::vector<bool> taken(header.size(), false);
    taken[y_col] = true;
    for (std::size_t j : delta_cols) taken[j] = true;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (!taken[j]) theta_cols.push_back(j);
    }
    if (theta_cols.empty()) throw SchemaError("no columns remain for the test block");
  } else {
    for (const auto& name : schema.test) theta_cols.push_back(locate(name, "test"));
  }
  {
    std::vector<std::size_t> all{y_col};
    all.insert(all.end(), delta_cols.begin(), delta_cols.end());
    all.insert(all.end(), theta_cols.begin(), theta_cols.end());
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
      throw SchemaError("a column is assigned more than one role");
    }
  }

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    strip_eol(line);
    if (line.empty()) continue;  // tolerate a trailing blank line
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                       " cells, header has " + std::to_string(header.size()));
    }
    std::vector<double> row(header.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      row[j] = parse_cell(cells[j], lineno, header[j]);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaError("'" + path + "' has a header but no data rows");

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  Dataset ds;
  ds.y.resize(n);
  ds.x_delta.resize(n, static_cast<Eigen::Index>(delta_cols.size()));
  ds.x_theta.resize(n, static_cast<Eigen::Index>(theta_cols.size()));
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto& row = rows[static_cast<std::size_t>(t)];
    ds.y(t) = row[y_col];
    for (std::size_t j = 0; j < delta_cols.size(); ++j) {
      ds.x_delta(t, static_cast<Eigen::Index>(j)) = row[delta_cols[j]];
    }
    for (std::size_t j = 0; j < theta_cols.size(); ++j) {
      ds.x_theta(t, static_cast<Eigen::Index>(j)) = row[theta_cols[j]];
    }
  }
  ds.response_name = schema.response;
  for (std::size_t j : delta_cols) ds.delta_names.push_back(header[j]);
  for (std::size_t j : theta_cols) ds.theta_names.push_back(header[j]);

  require_valid(ds);
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");

  out << ds.response_name;
  for (Eigen::Index j = 0; j < ds.k_delta(); ++j) {
    out << ',' << (static_cast<std::size_t>(j) < ds.delta_names.size()
                       ? ds.delta_names[static_cast<std::size_t>(j)]
                       : "z" + std::to_string(j + 1));
  }
  for (Eigen::Index j = 0; j < ds.k_theta(); ++j) out << ',' << ds.theta_name(j + 1);
  out << '\n';

  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (Eigen::Index t = 0; t < ds.n(); ++t) {
    put(ds.y(t));
    for (Eigen::Index j = 0; j < ds.k_delta(); ++j) {
      out << ',';
      put(ds.x_delta(t, j));
    }
    for (Eigen::Index j = 0; j < ds.k_theta(); ++j) {
      out << ',';
      put(ds.x_theta(t, j));
    }
    out << '\n';
  }
  if (!out) throw SchemaError("short write to '" + path + "'");
}

namespace {

void check_block(const Eigen::MatrixXd& block, const char* role,
                 const std::vector<std::string>& names, Eigen::Index n,
                 std::vector<std::string>& out) {
  if (block.rows() != n) {
    out.push_back(std::string(role) + " block has " + std::to_string(block.rows()) +
                  " rows, response has " + std::to_string(n));
    return;
  }
  for (Eigen::Index j = 0; j < block.cols(); ++j) {
    std::string label = static_cast<std::size_t>(j) < names.size()
                            ? "'" + names[static_cast<std::size_t>(j)] + "'"
                            : "#" + std::to_string(j + 1);
    bool zero = true;
    for (Eigen::Index t = 0; t < block.rows(); ++t) {
      double v = block(t, j);
      if (!std::isfinite(v)) {
        out.push_back("non-finite value in " + std::string(role) + " column " + label +
                      " at row " + std::to_string(t + 1));
        zero = false;
        break;
      }
      if (v != 0.0) zero = false;
    }
    if (zero && block.rows() > 0) {
      out.push_back(std::string(role) + " column " + label + " is identically zero");
    }
  }
}

}  // namespace

std::vector<std::string> validate(const Dataset& ds) {
  std::vector<std::string> v;
  const Eigen::Index n = ds.n();
  if (n < 1) v.push_back("no observations");
  if (ds.k_theta() < 1) v.push_back("test block is empty (k_theta must be >= 1)");
  if (n < ds.k_delta() + 2) {
    v.push_back("n = " + std::to_string(n) + " < k_delta + 2 = " +
                std::to_string(ds.k_delta() + 2) +
                ": each parsimonious model needs a residual degree of freedom");
  }
  for (Eigen::Index t = 0; t < n; ++t) {
    if (!std::isfinite(ds.y(t))) {
      v.push_back("non-finite value in response at row " + std::to_string(t + 1));
      break;
    }
  }
  check_block(ds.x_delta, "nuisance", ds.delta_names, n, v);
  check_block(ds.x_theta, "test", ds.theta_names, n, v);
  return v;
}

void require_valid(const Dataset& ds) {
  std::vector<std::string> v = validate(ds);
  if (v.empty()) return;
  std::string msg = v.front();
  for (std::size_t i = 1; i < v.size(); ++i) msg += "; " + v[i];
  throw ValidationError(msg);
}

}  // namespace pmax
