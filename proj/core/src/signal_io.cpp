#include "phalcor/signal_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include <json.hpp>

#include "phalcor/error.hpp"

namespace phalcor {
namespace {

static_assert(std::endian::native == std::endian::little, "byte-order conversion not implemented");

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

template <typename T>
void put(std::vector<char>& buf, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  buf.insert(buf.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t offset) {
  if (offset + sizeof(T) > buf.size()) throw IoError("truncated file");
  T value;
  std::memcpy(&value, buf.data() + offset, sizeof(T));
  return value;
}

}  // namespace

void write_wav(const std::string& path, const MultichannelSignal& signal, SampleFormat format) {
  const auto channels = static_cast<std::uint16_t>(signal.channels());
  const auto frames = static_cast<std::uint32_t>(signal.samples());
  const std::uint16_t bits = format == SampleFormat::Pcm16 ? 16 : 32;
  const std::uint16_t block = channels * bits / 8;
  const std::uint32_t data_bytes = frames * block;
  const auto rate = static_cast<std::uint32_t>(std::lround(signal.fs));

  std::vector<char> buf;
  buf.reserve(44 + data_bytes);
  buf.insert(buf.end(), {'R', 'I', 'F', 'F'});
  put<std::uint32_t>(buf, 36 + data_bytes);
  buf.insert(buf.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put<std::uint32_t>(buf, 16);
  put<std::uint16_t>(buf, format == SampleFormat::Pcm16 ? 1 : 3);
  put<std::uint16_t>(buf, channels);
  put<std::uint32_t>(buf, rate);
  put<std::uint32_t>(buf, rate * block);
  put<std::uint16_t>(buf, block);
  put<std::uint16_t>(buf, bits);
  buf.insert(buf.end(), {'d', 'a', 't', 'a'});
  put<std::uint32_t>(buf, data_bytes);
  for (Eigen::Index t = 0; t < signal.samples(); ++t)
    for (Eigen::Index q = 0; q < signal.channels(); ++q) {
      const double x = signal.data(q, t);
      if (format == SampleFormat::Pcm16)
        put<std::int16_t>(buf, static_cast<std::int16_t>(std::lround(std::clamp(x, -1.0, 1.0) * 32767.0)));
      else
        put<float>(buf, static_cast<float>(x));
    }
  write_file(path, buf);
}

MultichannelSignal read_wav(const std::string& path) {
  const auto buf = read_file(path);
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw IoError(path + ": not a RIFF/WAVE file");
  std::uint16_t tag = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_offset = 0, data_size = 0;
  for (std::size_t pos = 12; pos + 8 <= buf.size();) {
    const std::string id(buf.data() + pos, 4);
    const auto size = get<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      tag = get<std::uint16_t>(buf, body);
      channels = get<std::uint16_t>(buf, body + 2);
      rate = get<std::uint32_t>(buf, body + 4);
      bits = get<std::uint16_t>(buf, body + 14);
      if (tag == 0xFFFE && size >= 26) tag = get<std::uint16_t>(buf, body + 24);
    } else if (id == "data") {
      data_offset = body;
      data_size = std::min<std::size_t>(size, buf.size() - body);
    }
    pos = body + size + (size & 1u);
  }
  if (channels == 0 || rate == 0 || data_offset == 0) throw IoError(path + ": missing fmt or data chunk");
  const bool pcm16 = tag == 1 && bits == 16;
  const bool f32 = tag == 3 && bits == 32;
  if (!pcm16 && !f32) throw IoError(path + ": only 16-bit PCM and 32-bit float WAV are supported");
  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  MultichannelSignal s;
  s.fs = rate;
  s.data.resize(channels, static_cast<Eigen::Index>(frames));
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t q = 0; q < channels; ++q) {
      const std::size_t off = data_offset + (t * channels + q) * width;
      s.data(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(t)) =
          pcm16 ? get<std::int16_t>(buf, off) / 32768.0 : static_cast<double>(get<float>(buf, off));
    }
  return s;
}

void write_raw_f32(const std::string& path, const MultichannelSignal& signal) {
  std::vector<char> buf;
  buf.reserve(static_cast<std::size_t>(signal.data.size()) * 4);
  for (Eigen::Index t = 0; t < signal.samples(); ++t)
    for (Eigen::Index q = 0; q < signal.channels(); ++q) put<float>(buf, static_cast<float>(signal.data(q, t)));
  write_file(path, buf);
  nlohmann::ordered_json header{{"format", "f32le"},
                                {"layout", "interleaved"},
                                {"fs", signal.fs},
                                {"channels", signal.channels()},
                                {"frames", signal.samples()}};
  const auto text = header.dump(2) + "\n";
  write_file(path + ".json", std::vector<char>(text.begin(), text.end()));
}

MultichannelSignal read_raw_f32(const std::string& path) {
  const auto header_bytes = read_file(path + ".json");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_bytes.begin(), header_bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ".json: " + e.what());
  }
  if (header.value("format", "f32le") != "f32le") throw IoError(path + ".json: unsupported format");
  const auto channels = header.at("channels").get<Eigen::Index>();
  const auto buf = read_file(path);
  const auto frames = header.value("frames", static_cast<Eigen::Index>(buf.size() / 4) / std::max<Eigen::Index>(channels, 1));
  if (channels <= 0 || static_cast<std::size_t>(frames * channels) * 4 > buf.size())
    throw IoError(path + ": size does not match its sidecar header");
  MultichannelSignal s;
  s.fs = header.at("fs").get<double>();
  s.data.resize(channels, frames);
  for (Eigen::Index t = 0; t < frames; ++t)
    for (Eigen::Index q = 0; q < channels; ++q)
      s.data(q, t) = get<float>(buf, static_cast<std::size_t>(t * channels + q) * 4);
  return s;
}

MultichannelSignal read_signal(const std::string& path) {
  const auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav" ? read_wav(path) : read_raw_f32(path);
}

}  // namespace phalcor
