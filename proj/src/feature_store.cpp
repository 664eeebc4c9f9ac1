#include "avdoa/feature_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "avdoa/error.hpp"

namespace avdoa {

namespace {

static_assert(std::endian::native == std::endian::little, "feature store assumes a little-endian host");

template <typename T>
void put(std::vector<char>& out, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T take(const std::vector<char>& in, std::size_t& pos, const std::string& where) {
  require(pos + sizeof(T) <= in.size(), ErrorCode::FormatError, where + ": truncated record");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

FeatureRecord make_record(std::uint32_t frame_index, std::uint16_t rows, std::uint16_t cols,
                          std::span<const double> values) {
  require(values.size() == std::size_t{rows} * cols, ErrorCode::ShapeMismatch, "record value count");
  FeatureRecord r{frame_index, rows, cols, {}};
  r.values.reserve(values.size());
  for (double v : values) r.values.push_back(static_cast<float>(v));
  return r;
}

void write_feature_store(const std::filesystem::path& path, std::span<const FeatureRecord> records) {
  std::vector<char> out{'D', 'O', 'A', 'F'};
  put<std::uint16_t>(out, kFeatureStoreVersion);
  for (const auto& r : records) {
    require(r.values.size() == std::size_t{r.rows} * r.cols, ErrorCode::ShapeMismatch, "record value count");
    put<std::uint32_t>(out, r.frame_index);
    put<std::uint16_t>(out, r.rows);
    put<std::uint16_t>(out, r.cols);
    for (float v : r.values) put<float>(out, v);
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::vector<FeatureRecord> read_feature_store(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::FileNotFound, path.string());
  const std::vector<char> in((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  const std::string where = path.string();
  require(in.size() >= 4 && std::memcmp(in.data(), "DOAF", 4) == 0, ErrorCode::BadMagic, where);
  std::size_t pos = 4;
  const auto version = take<std::uint16_t>(in, pos, where);
  require(version == kFeatureStoreVersion, ErrorCode::VersionMismatch,
          where + ": version " + std::to_string(version));
  std::vector<FeatureRecord> records;
  while (pos < in.size()) {
    FeatureRecord r;
    r.frame_index = take<std::uint32_t>(in, pos, where);
    r.rows = take<std::uint16_t>(in, pos, where);
    r.cols = take<std::uint16_t>(in, pos, where);
    const std::size_t n = std::size_t{r.rows} * r.cols;
    require(pos + n * sizeof(float) <= in.size(), ErrorCode::FormatError, where + ": truncated record");
    r.values.resize(n);
    std::memcpy(r.values.data(), in.data() + pos, n * sizeof(float));
    pos += n * sizeof(float);
    records.push_back(std::move(r));
  }
  return records;
}

void write_feature_index(const std::filesystem::path& path, std::span<const IndexEntry> entries) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(17);
  for (const auto& e : entries) out << e.frame_index << " " << e.timestamp_s << "\n";
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::vector<IndexEntry> read_feature_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::vector<IndexEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    IndexEntry e;
    if (!(ls >> e.frame_index >> e.timestamp_s)) throw Error(ErrorCode::FormatError, path.string() + ": bad line");
    out.push_back(e);
  }
  return out;
}

}  // namespace avdoa
