#pragma once

#include <filesystem>

#include "doppler/core/sample.hpp"

namespace doppler {

// On-disk sample bundle: a directory holding
//   meta.json   acquisition, geometry, tags, provenance
//   iq.bin      float32 little-endian, [packet][h][w][2] (re, im), row-major
//   truth.bin   float32 [h][w] radial velocity, m/s
//   mask.bin    uint8 [h][w], 0 or 1
// Values are quantized to float32 on first write; after that,
// write(read(dir)) reproduces every file byte for byte.
void write_bundle(const std::filesystem::path& dir, const DopplerSample& sample);

DopplerSample read_bundle(const std::filesystem::path& dir);

}  // namespace doppler
