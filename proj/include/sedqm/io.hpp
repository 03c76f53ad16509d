#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sedqm/common.hpp"

namespace sedqm::io {

/// Shortest round-trip decimal form; identical inputs give identical text.
std::string format_double(double v);

/// Column-oriented CSV with a header row.  All columns must have equal length.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::span<const double>>& columns);

/// Long-format CSV x, p, then one column per named grid (row-major in x).
void write_grid_csv(const std::filesystem::path& path, const Grid1D& x, const Grid1D& p,
                    const std::vector<std::string>& names, const std::vector<std::span<const double>>& values);

/// Binary 2-D grid: "SEDQMGRD", u32 version (1), u32 ndims (2), u64 nx,
/// u64 np, f64 x_min, x_max, p_min, p_max, then nx*np f64 row-major in x.
/// Little-endian throughout.
void write_grid(const std::filesystem::path& path, const Grid1D& x, const Grid1D& p, std::span<const double> values);

struct GridFile {
    std::size_t nx = 0;
    std::size_t np = 0;
    double x_min = 0.0, x_max = 0.0, p_min = 0.0, p_max = 0.0;
    std::vector<double> values;
};

GridFile read_grid(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace sedqm::io
