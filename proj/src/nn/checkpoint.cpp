#include "avdoa/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "avdoa/error.hpp"

namespace avdoa::nn {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

template <typename T>
void put(std::vector<char>& out, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

void put_block(std::vector<char>& out, const std::vector<double>& values) {
  for (double v : values) put<double>(out, v);
}

class Reader {
 public:
  explicit Reader(const std::vector<char>& bytes) : bytes_(bytes) {}

  template <typename T>
  T take() {
    require(pos_ + sizeof(T) <= bytes_.size(), ErrorCode::FormatError, "checkpoint truncated");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void take_block(std::vector<double>& values) {
    for (double& v : values) v = take<double>();
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

// The const_cast is confined here: parameters() hands out mutable spans but
// serialization only reads them.
std::vector<ParamRef> params_of(const Network& net) { return const_cast<Network&>(net).parameters(); }

}  // namespace

std::vector<char> serialize_checkpoint(const Network& net) {
  const ModelConfig& cfg = net.config();
  std::vector<char> out{'D', 'O', 'A', 'M'};
  put<std::uint16_t>(out, kCheckpointVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(cfg.kind));
  std::vector<std::uint32_t> dims = {static_cast<std::uint32_t>(cfg.gcc_dim), static_cast<std::uint32_t>(cfg.vis_dim),
                                     static_cast<std::uint32_t>(cfg.outputs),
                                     static_cast<std::uint32_t>(cfg.weight_hidden)};
  for (std::size_t h : cfg.hidden) dims.push_back(static_cast<std::uint32_t>(h));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(dims.size()));
  for (std::uint32_t d : dims) put<std::uint32_t>(out, d);
  const auto& norms = net.trunk_norm();
  put<double>(out, norms.empty() ? 0.1 : norms.front().momentum);
  put<double>(out, norms.empty() ? 1e-5 : norms.front().epsilon);
  for (const auto& p : params_of(net))
    for (double v : p.value) put<double>(out, v);
  for (const auto& bn : norms) {
    put_block(out, bn.running_mean);
    put_block(out, bn.running_var);
  }
  return out;
}

Network deserialize_checkpoint(const std::vector<char>& bytes) {
  require(bytes.size() >= 4 && std::memcmp(bytes.data(), "DOAM", 4) == 0, ErrorCode::BadMagic,
          "not a model checkpoint");
  Reader in(bytes);
  in.take<std::uint32_t>();
  const auto version = in.take<std::uint16_t>();
  require(version == kCheckpointVersion, ErrorCode::VersionMismatch,
          "checkpoint version " + std::to_string(version));
  const auto tag = in.take<std::uint8_t>();
  require(tag <= 2, ErrorCode::FormatError, "unknown architecture tag " + std::to_string(tag));
  const auto dim_count = in.take<std::uint16_t>();
  require(dim_count >= 5, ErrorCode::FormatError, "checkpoint dimension table too short");
  std::vector<std::uint32_t> dims(dim_count);
  for (auto& d : dims) d = in.take<std::uint32_t>();

  ModelConfig cfg;
  cfg.kind = static_cast<ModelKind>(tag);
  cfg.gcc_dim = dims[0];
  cfg.vis_dim = dims[1];
  cfg.outputs = dims[2];
  cfg.weight_hidden = dims[3];
  cfg.hidden.assign(dims.begin() + 4, dims.end());
  Network net(cfg, 0);
  const double momentum = in.take<double>();
  const double epsilon = in.take<double>();
  for (const auto& p : net.parameters())
    for (double& v : p.value) v = in.take<double>();
  for (auto& bn : net.trunk_norm()) {
    bn.momentum = momentum;
    bn.epsilon = epsilon;
    in.take_block(bn.running_mean);
    in.take_block(bn.running_var);
  }
  require(in.done(), ErrorCode::FormatError, "trailing bytes after checkpoint");
  return net;
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(net);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

void load_checkpoint_into(Network& net, const std::filesystem::path& path) {
  Network loaded = load_checkpoint(path);
  if (!(loaded.config() == net.config())) {
    throw Error(ErrorCode::ShapeMismatch, std::string("checkpoint holds a ") + to_string(loaded.config().kind) +
                                              " model, expected " + to_string(net.config().kind));
  }
  net = std::move(loaded);
}

}  // namespace avdoa::nn
