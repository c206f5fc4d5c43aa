#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "phalcor/room_sim.hpp"

namespace phalcor {

/// Shortest round-trip decimal; "nan", "inf", "-inf" for non-finite values.
std::string csv_number(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws IoError when the column is absent.
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::size_t col) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

/// Columns: order, delay_s, amplitude, elevation_rad, azimuth_rad. The direct
/// sound is the first row (order 0, delay 0).
void write_reflections_csv(const std::string& path, const ReflectionSet& refs);
ReflectionSet read_reflections_csv(const std::string& path);

}  // namespace phalcor
