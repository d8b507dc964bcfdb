#include "doppler/augment/manifest.hpp"

#include <algorithm>
#include <fstream>

#include "doppler/core/file_io.hpp"
#include "doppler/core/json_io.hpp"
#include "doppler/rng.hpp"

namespace doppler::augment {

void write_manifest(const std::filesystem::path& file, const DatasetManifest& manifest) {
  ordered_json j;
  j["format_version"] = 1;
  j["fold_count"] = manifest.fold_count;
  ordered_json entries = ordered_json::array();
  for (const auto& e : manifest.entries) {
    ordered_json je;
    je["path"] = e.path;
    je["sequence_id"] = e.sequence_id;
    ordered_json tags = ordered_json::array();
    for (Tag t : e.tags) tags.push_back(to_string(t));
    je["tags"] = tags;
    je["fold"] = e.fold;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);

  write_text_atomic(file, j.dump(2) + "\n");
}

DatasetManifest read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open: " + file.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid manifest " + file.string() + ": " + e.what());
  }
  DatasetManifest m;
  try {
    require_data(j.at("format_version").get<int>() == 1,
                 "unsupported manifest format_version in " + file.string());
    m.fold_count = j.at("fold_count").get<int>();
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.path = je.at("path").get<std::string>();
      e.sequence_id = je.at("sequence_id").get<std::string>();
      for (const auto& t : je.at("tags")) e.tags.insert(tag_from_string(t.get<std::string>()));
      e.fold = je.at("fold").get<int>();
      require_data(!e.path.empty(), "manifest entry with empty path in " + file.string());
      require_data(!e.sequence_id.empty(),
                   "manifest entry with empty sequence_id in " + file.string());
      require_data(e.fold >= -1 && (m.fold_count == 0 || e.fold < m.fold_count),
                   "manifest entry with out-of-range fold in " + file.string());
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad field in manifest " + file.string() + ": " + e.what());
  }
  return m;
}

void split_folds(DatasetManifest& manifest, int fold_count, std::uint64_t seed) {
  require_data(fold_count >= 2, "split: fold_count must be >= 2");

  std::vector<std::string> sequences;
  for (const auto& e : manifest.entries)
    if (std::find(sequences.begin(), sequences.end(), e.sequence_id) == sequences.end())
      sequences.push_back(e.sequence_id);
  require_data(static_cast<int>(sequences.size()) >= fold_count,
               "split: need at least as many sequences as folds, have " +
                   std::to_string(sequences.size()));

  // Fisher-Yates with the library generator, then round-robin assignment.
  Rng rng(derive_seed(seed, "folds"));
  for (std::size_t i = sequences.size(); i > 1; --i)
    std::swap(sequences[i - 1], sequences[rng.below(i)]);

  std::map<std::string, int> fold_of;
  for (std::size_t i = 0; i < sequences.size(); ++i)
    fold_of[sequences[i]] = static_cast<int>(i % fold_count);

  manifest.fold_count = fold_count;
  for (auto& e : manifest.entries) e.fold = fold_of.at(e.sequence_id);
}

std::map<std::string, int> tag_counts(const DatasetManifest& manifest) {
  std::map<std::string, int> counts;
  for (const auto& e : manifest.entries)
    for (Tag t : e.tags) ++counts[to_string(t)];
  return counts;
}

}  // namespace doppler::augment
