#include "avdoa/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "avdoa/error.hpp"

namespace avdoa {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

}  // namespace

WavReader::WavReader(const std::filesystem::path& path) : path_(path), file_(path, std::ios::binary) {
  if (!file_) throw Error(ErrorCode::FileNotFound, path.string());
  const std::string where = path.string() + ": ";
  std::uint8_t head[12];
  file_.read(reinterpret_cast<char*>(head), 12);
  require(file_.gcount() == 12 && std::memcmp(head, "RIFF", 4) == 0 && std::memcmp(head + 8, "WAVE", 4) == 0,
          ErrorCode::BadWav, where + "not a RIFF/WAVE file");
  file_.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::streamoff>(file_.tellg());

  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  std::uint64_t data_bytes = 0;
  bool have_fmt = false, have_data = false;
  std::streamoff pos = 12;
  while (pos + 8 <= file_size && !(have_fmt && have_data)) {
    std::uint8_t chunk[8];
    file_.seekg(pos);
    file_.read(reinterpret_cast<char*>(chunk), 8);
    const auto size = read_le<std::uint32_t>(chunk + 4);
    const std::streamoff body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      require(size >= 16 && body + size <= file_size, ErrorCode::BadWav, where + "bad fmt chunk");
      std::vector<std::uint8_t> fmt(size);
      file_.read(reinterpret_cast<char*>(fmt.data()), size);
      format_ = read_le<std::uint16_t>(fmt.data());
      channels_ = read_le<std::uint16_t>(fmt.data() + 2);
      rate = read_le<std::uint32_t>(fmt.data() + 4);
      bits = read_le<std::uint16_t>(fmt.data() + 14);
      if (format_ == kFormatExtensible) {
        require(size >= 26, ErrorCode::BadWav, where + "short extensible fmt chunk");
        format_ = read_le<std::uint16_t>(fmt.data() + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data_offset_ = body;
      data_bytes = std::min<std::uint64_t>(size, static_cast<std::uint64_t>(file_size - body));
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }

  require(have_fmt, ErrorCode::BadWav, where + "missing fmt chunk");
  require(have_data, ErrorCode::BadWav, where + "missing data chunk");
  require(channels_ > 0 && rate > 0, ErrorCode::BadWav, where + "bad channel count or rate");
  const bool supported = (format_ == kFormatPcm && (bits == 16 || bits == 32)) || (format_ == kFormatFloat && bits == 32);
  require(supported, ErrorCode::BadWav, where + "unsupported encoding");
  width_ = bits / 8;
  frames_ = static_cast<std::size_t>(data_bytes / (width_ * channels_));
  sample_rate_ = rate;
}

MultichannelSignal WavReader::read(std::size_t offset, std::size_t count) {
  require(offset + count <= frames_, ErrorCode::TooShort, path_.string() + ": read past end of audio");
  std::vector<std::uint8_t> raw(count * channels_ * width_);
  file_.clear();
  file_.seekg(data_offset_ + static_cast<std::streamoff>(offset * channels_ * width_));
  file_.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  require(file_.gcount() == static_cast<std::streamsize>(raw.size()), ErrorCode::BadWav,
          path_.string() + ": short read");

  MultichannelSignal out;
  out.sample_rate = sample_rate_;
  out.channels.assign(channels_, std::vector<double>(count));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const std::uint8_t* p = raw.data() + (i * channels_ + c) * width_;
      double v;
      if (format_ == kFormatFloat) {
        v = read_le<float>(p);
      } else if (width_ == 2) {
        v = read_le<std::int16_t>(p) / 32768.0;
      } else {
        v = read_le<std::int32_t>(p) / 2147483648.0;
      }
      out.channels[c][i] = v;
    }
  }
  return out;
}

MultichannelSignal read_wav(const std::filesystem::path& path) {
  WavReader reader(path);
  return reader.read(0, reader.length());
}

namespace {

std::vector<std::uint8_t> float_header(std::size_t channels, double sample_rate, std::uint32_t data_bytes) {
  std::vector<std::uint8_t> out;
  const auto ch = static_cast<std::uint16_t>(channels);
  const auto rate = static_cast<std::uint32_t>(std::llround(sample_rate));
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_le<std::uint32_t>(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, kFormatFloat);
  put_le<std::uint16_t>(out, ch);
  put_le<std::uint32_t>(out, rate);
  put_le<std::uint32_t>(out, rate * ch * 4);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(ch * 4));
  put_le<std::uint16_t>(out, 32);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_le<std::uint32_t>(out, data_bytes);
  return out;
}

}  // namespace

WavWriter::WavWriter(const std::filesystem::path& path, std::size_t channels, double sample_rate)
    : path_(path), file_(path, std::ios::binary), channels_(channels), sample_rate_(sample_rate) {
  if (!file_) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  require(channels > 0 && sample_rate > 0, ErrorCode::InvalidArgument, "bad WAV writer parameters");
  const auto header = float_header(channels_, sample_rate_, 0);
  file_.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
}

WavWriter::~WavWriter() {
  if (!finished_) {
    try {
      finish();
    } catch (...) {
    }
  }
}

void WavWriter::append(const MultichannelSignal& block) {
  block.validate();
  require(block.num_channels() == channels_, ErrorCode::ShapeMismatch, "WAV block channel count");
  require(block.sample_rate == sample_rate_, ErrorCode::SampleRateMismatch, "WAV block sample rate");
  std::vector<float> interleaved(block.length() * channels_);
  for (std::size_t i = 0; i < block.length(); ++i)
    for (std::size_t c = 0; c < channels_; ++c) interleaved[i * channels_ + c] = static_cast<float>(block.channels[c][i]);
  file_.write(reinterpret_cast<const char*>(interleaved.data()),
              static_cast<std::streamsize>(interleaved.size() * sizeof(float)));
  if (!file_) throw Error(ErrorCode::IoError, "short write to " + path_.string());
  frames_ += block.length();
}

void WavWriter::finish() {
  finished_ = true;
  const std::uint64_t data_bytes = frames_ * channels_ * 4;
  require(data_bytes <= 0xFFFFFFFFull - 36, ErrorCode::IoError, "audio too large for a WAV file");
  const auto header = float_header(channels_, sample_rate_, static_cast<std::uint32_t>(data_bytes));
  file_.seekp(0);
  file_.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  file_.close();
  if (!file_) throw Error(ErrorCode::IoError, "failed to finalize " + path_.string());
}

void write_wav(const std::filesystem::path& path, const MultichannelSignal& signal, WavEncoding encoding) {
  signal.validate();
  const auto channels = static_cast<std::uint16_t>(signal.num_channels());
  const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t format = encoding == WavEncoding::Float32 ? kFormatFloat : kFormatPcm;
  const auto rate = static_cast<std::uint32_t>(std::llround(signal.sample_rate));
  const std::uint64_t data_bytes64 = std::uint64_t{signal.length()} * channels * (bits / 8);
  require(data_bytes64 <= 0xFFFFFFFFull - 36, ErrorCode::IoError, "audio too large for a WAV file");
  const auto data_bytes = static_cast<std::uint32_t>(data_bytes64);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_le<std::uint32_t>(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, format);
  put_le<std::uint16_t>(out, channels);
  put_le<std::uint32_t>(out, rate);
  put_le<std::uint32_t>(out, rate * channels * (bits / 8));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(channels * (bits / 8)));
  put_le<std::uint16_t>(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_le<std::uint32_t>(out, data_bytes);

  for (std::size_t i = 0; i < signal.length(); ++i) {
    for (const auto& ch : signal.channels) {
      const double s = ch[i];
      switch (encoding) {
        case WavEncoding::Pcm16:
          put_le<std::int16_t>(out, static_cast<std::int16_t>(std::clamp(std::lround(s * 32768.0), -32768L, 32767L)));
          break;
        case WavEncoding::Pcm32:
          put_le<std::int32_t>(out, static_cast<std::int32_t>(
                                        std::clamp(std::llround(s * 2147483648.0), -2147483648LL, 2147483647LL)));
          break;
        case WavEncoding::Float32:
          put_le<float>(out, static_cast<float>(s));
          break;
      }
    }
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace avdoa
