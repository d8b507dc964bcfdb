#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "doppler/core/sample.hpp"

namespace doppler::cli {

// Velocity map file: one ASCII header line pair then float32 rows.
//
//   VMAP1\n
//   <height> <width> <nyquist_mps>\n
//   height*width float32 little-endian, row-major (depth rows)
//
// The Nyquist velocity is printed with 17 significant digits so the header
// round-trips the double exactly and rewrites are byte-identical.
void write_velocity_map(const std::filesystem::path& file, const VelocityMap& map);
VelocityMap read_velocity_map(const std::filesystem::path& file);

// Binary PPM (P6) with a fixed diverging colormap over [-nyquist, +nyquist]:
// full negative saturates blue, zero is white, full positive saturates red,
// out-of-range values clamp to the endpoints. Non-finite values are a
// NumericError.
void write_velocity_ppm(const std::filesystem::path& file, const VelocityMap& map);

// Rows of preformatted cells, written atomically with comma separators.
// Numeric cells should come from format_number so reruns are byte-identical.
void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::string format_number(double x);  // shortest %.9g form, "nan" for NaN

}  // namespace doppler::cli
