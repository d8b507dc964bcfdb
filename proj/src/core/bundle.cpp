#include "doppler/core/bundle.hpp"

#include <bit>
#include <cstring>
#include <vector>

#include "doppler/core/file_io.hpp"
#include "doppler/core/json_io.hpp"

static_assert(std::endian::native == std::endian::little,
              "bundle files are little-endian; big-endian hosts are not supported");

namespace doppler {
namespace {

namespace fs = std::filesystem;

float quantize(double x) { return static_cast<float>(x); }

}  // namespace

void write_bundle(const fs::path& dir, const DopplerSample& sample) {
  // Quantize to the stored precision first so the written tags and files
  // describe exactly what a reader will see.
  DopplerSample q = sample;
  const int h = sample.iq.geometry.height;
  const int w = sample.iq.geometry.width;
  const int n = static_cast<int>(sample.iq.frames.size());

  std::vector<float> iq_buf(static_cast<std::size_t>(n) * h * w * 2);
  std::size_t pos = 0;
  for (int k = 0; k < n; ++k) {
    const ComplexField& f = sample.iq.frames[k];
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        iq_buf[pos++] = quantize(f(i, j).real());
        iq_buf[pos++] = quantize(f(i, j).imag());
      }
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        q.iq.frames[k](i, j) = Complex(quantize(f(i, j).real()), quantize(f(i, j).imag()));
  }

  std::vector<float> truth_buf(static_cast<std::size_t>(h) * w);
  std::vector<std::uint8_t> mask_buf(static_cast<std::size_t>(h) * w);
  pos = 0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j, ++pos) {
      truth_buf[pos] = quantize(sample.truth.values(i, j));
      q.truth.values(i, j) = truth_buf[pos];
      mask_buf[pos] = sample.mask(i, j) ? 1 : 0;
    }
  q.truth.nyquist_mps = nyquist_velocity(q.iq.params);
  refresh_aliased_tag(q);
  validate(q);

  fs::create_directories(dir);

  ordered_json meta;
  meta["format_version"] = 1;
  meta["sequence_id"] = q.sequence_id;
  ordered_json tags = ordered_json::array();
  for (Tag t : q.tags) tags.push_back(to_string(t));
  meta["tags"] = tags;
  meta["acquisition"] = to_json(q.iq.params);
  meta["geometry"] = to_json(q.iq.geometry);
  if (q.scene_json.empty())
    meta["scene"] = nullptr;
  else
    meta["scene"] = ordered_json::parse(q.scene_json);

  const std::string meta_text = meta.dump(2) + "\n";
  write_file_atomic(dir / "meta.json", meta_text.data(), meta_text.size());
  write_file_atomic(dir / "iq.bin", iq_buf.data(), iq_buf.size() * sizeof(float));
  write_file_atomic(dir / "truth.bin", truth_buf.data(), truth_buf.size() * sizeof(float));
  write_file_atomic(dir / "mask.bin", mask_buf.data(), mask_buf.size() * sizeof(std::uint8_t));
}

DopplerSample read_bundle(const fs::path& dir) {
  const auto meta_bytes = read_whole_file(dir / "meta.json");
  ordered_json meta;
  try {
    meta = ordered_json::parse(meta_bytes.begin(), meta_bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid meta.json in " + dir.string() + ": " + e.what());
  }

  DopplerSample s;
  try {
    require_data(meta.at("format_version").get<int>() == 1,
                 "unsupported bundle format_version in " + dir.string());
    s.sequence_id = meta.at("sequence_id").get<std::string>();
    for (const auto& t : meta.at("tags")) s.tags.insert(tag_from_string(t.get<std::string>()));
    s.iq.params = acquisition_from_json(meta.at("acquisition"));
    s.iq.geometry = geometry_from_json(meta.at("geometry"));
    if (!meta.at("scene").is_null()) s.scene_json = meta.at("scene").dump();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad field in meta.json in " + dir.string() + ": " + e.what());
  }

  const int h = s.iq.geometry.height;
  const int w = s.iq.geometry.width;
  const int n = s.iq.params.packet_size;
  validate(s.iq.params);
  validate(s.iq.geometry);

  const auto iq_bytes = read_whole_file(dir / "iq.bin");
  const std::size_t want_iq = static_cast<std::size_t>(n) * h * w * 2 * sizeof(float);
  require_data(iq_bytes.size() == want_iq,
               "iq.bin size mismatch in " + dir.string() + ": expected " +
                   std::to_string(want_iq) + " bytes, found " + std::to_string(iq_bytes.size()));
  const float* iq_f = reinterpret_cast<const float*>(iq_bytes.data());
  s.iq.frames.assign(n, ComplexField(h, w));
  std::size_t pos = 0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j, pos += 2)
        s.iq.frames[k](i, j) = Complex(iq_f[pos], iq_f[pos + 1]);

  const auto truth_bytes = read_whole_file(dir / "truth.bin");
  const std::size_t want_hw = static_cast<std::size_t>(h) * w;
  require_data(truth_bytes.size() == want_hw * sizeof(float),
               "truth.bin size mismatch in " + dir.string());
  const float* truth_f = reinterpret_cast<const float*>(truth_bytes.data());
  s.truth.values.resize(h, w);
  pos = 0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j, ++pos) s.truth.values(i, j) = truth_f[pos];
  s.truth.nyquist_mps = nyquist_velocity(s.iq.params);

  const auto mask_bytes = read_whole_file(dir / "mask.bin");
  require_data(mask_bytes.size() == want_hw, "mask.bin size mismatch in " + dir.string());
  s.mask.resize(h, w);
  pos = 0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j, ++pos) {
      const auto b = static_cast<std::uint8_t>(mask_bytes[pos]);
      require_data(b == 0 || b == 1, "mask.bin has a byte other than 0/1 in " + dir.string());
      s.mask(i, j) = b == 1;
    }

  validate(s);
  return s;
}

}  // namespace doppler
