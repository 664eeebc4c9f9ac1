#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace avdoa {

// Binary container shared by audio (P = pairs) and visual (P = 2) features:
// "DOAF", u16 version, then records {u32 frame_index, u16 P, u16 L, P*L f32},
// all little-endian.
inline constexpr std::uint16_t kFeatureStoreVersion = 1;

struct FeatureRecord {
  std::uint32_t frame_index = 0;
  std::uint16_t rows = 0;
  std::uint16_t cols = 0;
  std::vector<float> values;

  friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

FeatureRecord make_record(std::uint32_t frame_index, std::uint16_t rows, std::uint16_t cols,
                          std::span<const double> values);

void write_feature_store(const std::filesystem::path& path, std::span<const FeatureRecord> records);
std::vector<FeatureRecord> read_feature_store(const std::filesystem::path& path);

struct IndexEntry {
  std::uint32_t frame_index = 0;
  double timestamp_s = 0.0;
};

// Sidecar text: one "frame_index timestamp_s" line per record.
void write_feature_index(const std::filesystem::path& path, std::span<const IndexEntry> entries);
std::vector<IndexEntry> read_feature_index(const std::filesystem::path& path);

}  // namespace avdoa
