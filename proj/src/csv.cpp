#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "twophase/data.hpp"

namespace twophase {

namespace {

std::vector<std::string> split_line(const std::string& line, std::size_t row) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  if (quoted) throw DataError("row " + std::to_string(row) + ": unterminated quote");
  cells.push_back(cell);
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& cell, std::size_t row, const std::string& column) {
  const std::string s = trim(cell);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v))
    throw DataError("row " + std::to_string(row) + ": column '" + column + "' is not a finite number: '" + s + "'");
  return v;
}

int parse_flag(const std::string& cell, std::size_t row, const std::string& column) {
  const double v = parse_real(cell, row, column);
  if (v != 0.0 && v != 1.0)
    throw DataError("row " + std::to_string(row) + ": column '" + column + "' must be 0 or 1");
  return static_cast<int>(v);
}

}  // namespace

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Dataset read_csv(std::istream& in, const Schema& schema) {
  if (schema.treatment.empty() || schema.outcome.empty() || schema.delta.empty())
    throw DataError("schema must name treatment, outcome and delta columns");
  if (schema.w1.empty()) throw DataError("schema must name at least one w1 column");

  std::string line;
  if (!std::getline(in, line)) throw DataError("missing header row");
  const auto header = split_line(line, 0);
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < header.size(); ++j) index[trim(header[j])] = j;
  auto locate = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw DataError("header lacks column '" + name + "'");
    return it->second;
  };
  const std::size_t ia = locate(schema.treatment);
  const std::size_t iy = locate(schema.outcome);
  const std::size_t id = locate(schema.delta);
  std::vector<std::size_t> iw1, iw2;
  for (const auto& c : schema.w1) iw1.push_back(locate(c));
  for (const auto& c : schema.w2) iw2.push_back(locate(c));

  std::vector<ObservedRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line, row);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    ObservedRecord r;
    r.a = parse_flag(cells[ia], row, schema.treatment);
    r.delta = parse_flag(cells[id], row, schema.delta);
    r.y = parse_real(cells[iy], row, schema.outcome);
    r.w1.resize(static_cast<Eigen::Index>(iw1.size()));
    for (std::size_t j = 0; j < iw1.size(); ++j)
      r.w1(static_cast<Eigen::Index>(j)) = parse_real(cells[iw1[j]], row, schema.w1[j]);
    std::size_t filled = 0;
    for (auto j : iw2) filled += trim(cells[j]).empty() ? 0 : 1;
    if (r.delta == 0 && filled > 0)
      throw DataError("row " + std::to_string(row) + ": delta=0 but phase-2 cells are filled");
    if (r.delta == 1) {
      if (filled != iw2.size()) throw DataError("row " + std::to_string(row) + ": delta=1 but a phase-2 cell is empty");
      Eigen::VectorXd w2(static_cast<Eigen::Index>(iw2.size()));
      for (std::size_t j = 0; j < iw2.size(); ++j)
        w2(static_cast<Eigen::Index>(j)) = parse_real(cells[iw2[j]], row, schema.w2[j]);
      r.w2 = w2;
    }
    records.push_back(std::move(r));
  }

  ColumnNames names;
  names.w1 = schema.w1;
  names.w2 = schema.w2;
  names.treatment = schema.treatment;
  names.outcome = schema.outcome;
  names.delta = schema.delta;
  return Dataset(records, schema.y_kind, schema.y_bounds, names);
}

Dataset load_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_csv(in, schema);
}

void write_csv(const Dataset& ds, std::ostream& out) {
  const auto& nm = ds.names();
  bool first = true;
  auto sep = [&] {
    if (!first) out << ',';
    first = false;
  };
  for (const auto& c : nm.w1) sep(), out << c;
  for (const auto& c : nm.w2) sep(), out << c;
  sep(), out << nm.treatment;
  sep(), out << nm.outcome;
  sep(), out << nm.delta;
  out << '\n';
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    first = true;
    for (Eigen::Index j = 0; j < ds.w1_dim(); ++j) sep(), out << format_real(ds.w1()(i, j));
    const bool observed = ds.delta()(i) == 1.0;
    for (Eigen::Index j = 0; j < ds.w2_dim(); ++j) {
      sep();
      if (observed) out << format_real(ds.w2()(i, j));
    }
    sep(), out << static_cast<int>(ds.a()(i));
    sep(), out << format_real(ds.y()(i));
    sep(), out << static_cast<int>(ds.delta()(i));
    out << '\n';
  }
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(ds, out);
}

}  // namespace twophase
