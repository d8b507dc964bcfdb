#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doppler/core/sample.hpp"

namespace doppler::augment {

struct ManifestEntry {
  std::string path;  // bundle directory, relative to the manifest file
  std::string sequence_id;
  std::set<Tag> tags;
  int fold = -1;  // -1 until split_folds assigns one
};

struct DatasetManifest {
  int fold_count = 0;
  std::vector<ManifestEntry> entries;
};

void write_manifest(const std::filesystem::path& file, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& file);

// Samples sharing a sequence_id always land in the same fold, folds are
// balanced in sequences to within one, and the assignment is a pure
// function of (sequence ids, fold_count, seed).
void split_folds(DatasetManifest& manifest, int fold_count, std::uint64_t seed);

std::map<std::string, int> tag_counts(const DatasetManifest& manifest);

}  // namespace doppler::augment
