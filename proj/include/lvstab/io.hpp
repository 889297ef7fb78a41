#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "lvstab/grid.hpp"
#include "lvstab/spectral.hpp"

namespace lvstab {

/// 17 significant digits, lowercase scientific ("1.0000000000000000e+00").
std::string format_real(double x);

/// Field CSV: header `index,coord1[,coord2],value`, one row per interior node
/// in grid order.
void write_field_csv(std::ostream& out, const Field& f);
void write_field_csv(const std::filesystem::path& path, const Field& f);

/// Reads a Field CSV written for `grid`. Node count and coordinates must match
/// (coordinates to 1e-9 relative); throws InvalidArgument otherwise.
Field read_field_csv(const std::filesystem::path& path, const Grid& grid);

/// Spectrum CSV: header `index,lambda,residual`, 1-based index.
void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& spectrum);

}  // namespace lvstab
