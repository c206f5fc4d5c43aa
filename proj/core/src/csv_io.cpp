#include "phalcor/csv_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "phalcor/error.hpp"

namespace phalcor {

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  return fmt::format("{}", v);
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw IoError("csv: missing column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  const auto& cell = rows.at(row).at(col);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0') throw IoError("csv: '" + cell + "' is not a number");
  return v;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != t.header.size())
      throw IoError(path + ": row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(cells.size()) +
                    " fields, expected " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (first) throw IoError(path + ": empty csv");
  return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  if (!out) throw IoError("write failed for " + path);
}

void write_reflections_csv(const std::string& path, const ReflectionSet& refs) {
  CsvTable t;
  t.header = {"order", "delay_s", "amplitude", "elevation_rad", "azimuth_rad"};
  for (const auto& r : refs.all())
    t.rows.push_back({std::to_string(r.order), csv_number(r.delay), csv_number(r.amplitude),
                      csv_number(r.doa.elevation), csv_number(r.doa.azimuth)});
  write_csv(path, t);
}

ReflectionSet read_reflections_csv(const std::string& path) {
  const auto t = read_csv(path);
  const auto c_order = t.column("order"), c_delay = t.column("delay_s"), c_amp = t.column("amplitude"),
             c_el = t.column("elevation_rad"), c_az = t.column("azimuth_rad");
  ReflectionSet refs;
  bool have_direct = false;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    Reflection r;
    r.order = static_cast<int>(t.number(i, c_order));
    r.delay = t.number(i, c_delay);
    r.amplitude = t.number(i, c_amp);
    r.doa = {t.number(i, c_el), t.number(i, c_az)};
    if (r.order == 0 && !have_direct) {
      refs.direct = r;
      have_direct = true;
    } else {
      refs.reflections.push_back(r);
    }
  }
  if (!have_direct) throw IoError(path + ": no direct-sound row (order 0)");
  return refs;
}

}  // namespace phalcor
