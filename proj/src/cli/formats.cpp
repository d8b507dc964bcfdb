#include "doppler/cli/formats.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "doppler/core/file_io.hpp"

namespace doppler::cli {

void write_velocity_map(const std::filesystem::path& file, const VelocityMap& map) {
  const int h = static_cast<int>(map.values.rows());
  const int w = static_cast<int>(map.values.cols());
  require_data(h > 0 && w > 0, "velocity map is empty");
  require_data(map.nyquist_mps > 0, "velocity map has no Nyquist velocity");

  char header[96];
  std::snprintf(header, sizeof(header), "VMAP1\n%d %d %.17g\n", h, w, map.nyquist_mps);

  std::string blob(header);
  blob.resize(blob.size() + static_cast<std::size_t>(h) * w * sizeof(float));
  char* out = blob.data() + std::strlen(header);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const float v = static_cast<float>(map.values(i, j));
      std::memcpy(out, &v, sizeof(float));
      out += sizeof(float);
    }
  write_file_atomic(file, blob.data(), blob.size());
}

VelocityMap read_velocity_map(const std::filesystem::path& file) {
  const auto bytes = read_whole_file(file);
  const std::string text(bytes.begin(), bytes.end());
  if (text.rfind("VMAP1\n", 0) != 0)
    throw DataError("not a velocity map file: " + file.string());
  const auto header_end = text.find('\n', 6);
  require_data(header_end != std::string::npos, "truncated velocity map header: " + file.string());

  std::istringstream header(text.substr(6, header_end - 6));
  int h = 0, w = 0;
  double nyquist = 0.0;
  header >> h >> w >> nyquist;
  require_data(static_cast<bool>(header) && h > 0 && w > 0 && nyquist > 0,
               "bad velocity map header: " + file.string());

  const std::size_t offset = header_end + 1;
  const std::size_t expect = static_cast<std::size_t>(h) * w * sizeof(float);
  require_data(bytes.size() == offset + expect,
               "velocity map size mismatch: " + file.string());

  VelocityMap map;
  map.nyquist_mps = nyquist;
  map.values.resize(h, w);
  const char* in = bytes.data() + offset;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      float v = 0.0f;
      std::memcpy(&v, in, sizeof(float));
      in += sizeof(float);
      map.values(i, j) = v;
    }
  return map;
}

namespace {

// Two linear segments: blue (59,76,192) -> white (255,255,255) -> red
// (180,4,38), the familiar cool/warm diverging ramp.
void diverging_rgb(double t, unsigned char rgb[3]) {
  const double lo[3] = {59, 76, 192};
  const double mid[3] = {255, 255, 255};
  const double hi[3] = {180, 4, 38};
  const double u = t < -1 ? -1 : (t > 1 ? 1 : t);
  for (int c = 0; c < 3; ++c) {
    const double x = u < 0 ? mid[c] + (lo[c] - mid[c]) * (-u) : mid[c] + (hi[c] - mid[c]) * u;
    rgb[c] = static_cast<unsigned char>(x + 0.5);
  }
}

}  // namespace

void write_velocity_ppm(const std::filesystem::path& file, const VelocityMap& map) {
  const int h = static_cast<int>(map.values.rows());
  const int w = static_cast<int>(map.values.cols());
  require_data(h > 0 && w > 0, "velocity map is empty");
  require_data(map.nyquist_mps > 0, "velocity map has no Nyquist velocity");

  char header[64];
  std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", w, h);

  std::string blob(header);
  blob.reserve(blob.size() + static_cast<std::size_t>(h) * w * 3);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const double v = map.values(i, j);
      if (!std::isfinite(v))
        throw NumericError("non-finite velocity at (" + std::to_string(i) + ", " +
                           std::to_string(j) + ")");
      unsigned char rgb[3];
      diverging_rgb(v / map.nyquist_mps, rgb);
      blob.append(reinterpret_cast<const char*>(rgb), 3);
    }
  write_file_atomic(file, blob.data(), blob.size());
}

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string text;
  const auto append_row = [&text](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text += ',';
      text += cells[i];
    }
    text += '\n';
  };
  append_row(header);
  for (const auto& row : rows) {
    require_data(row.size() == header.size(), "csv row width mismatch");
    append_row(row);
  }
  write_text_atomic(file, text);
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

}  // namespace doppler::cli
