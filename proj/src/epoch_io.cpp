#include "ssvep/epoch_io.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "ssvep/errors.hpp"

namespace ssvep {
namespace {

constexpr char kMagic[8] = {'S', 'S', 'V', 'P', '0', '0', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  const std::string& path;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw DataError("truncated SSVP1 file: " + path);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
      v = (v << 8) | static_cast<std::uint8_t>(buf[pos + static_cast<std::size_t>(i)]);
    }
    pos += 4;
    return v;
  }
  std::uint16_t u16() {
    need(2);
    auto lo = static_cast<std::uint8_t>(buf[pos]);
    auto hi = static_cast<std::uint8_t>(buf[pos + 1]);
    pos += 2;
    return static_cast<std::uint16_t>(lo | (hi << 8));
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void write_ssvp(const std::string& path, const EpochSet& epochs) {
  std::string out;
  out.reserve(64 + epochs.data.size() * 4);
  out.append(kMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(epochs.n_trials));
  put_u32(out, static_cast<std::uint32_t>(epochs.n_channels));
  put_u32(out, static_cast<std::uint32_t>(epochs.n_samples));
  put_u32(out, static_cast<std::uint32_t>(epochs.meta.sampling_rate_hz + 0.5));
  for (int label : epochs.labels) out.push_back(static_cast<char>(label));
  for (const auto& name : epochs.meta.layout.names) {
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.append(name);
  }
  for (double v : epochs.data) put_f32(out, static_cast<float>(v));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write failed: " + path);
}

EpochSet read_ssvp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  Reader r{buf, 0, path};
  const std::string magic = r.str(8);
  if (std::memcmp(magic.data(), kMagic, 8) != 0) {
    throw DataError("bad magic in " + path + " (not an SSVP1 file)");
  }
  const std::uint32_t n_trials = r.u32();
  const std::uint32_t n_channels = r.u32();
  const std::uint32_t n_samples = r.u32();
  const std::uint32_t fs = r.u32();
  if (fs == 0) throw DataError("zero sampling rate in " + path);

  std::vector<int> labels(n_trials);
  std::array<int, 4> class_counts{0, 0, 0, 0};
  for (auto& label : labels) {
    const std::uint8_t v = r.u8();
    if (v > 3) throw DataError("label out of range in " + path);
    label = v;
    ++class_counts[v];
  }

  ChannelLayout layout;
  for (std::uint32_t c = 0; c < n_channels; ++c) {
    layout.names.push_back(r.str(r.u16()));
  }

  SessionMeta meta;
  meta.sampling_rate_hz = fs;
  meta.flicker_s = static_cast<double>(n_samples) / fs;
  meta.trials_per_class = std::max(1, *std::max_element(class_counts.begin(), class_counts.end()));
  meta.layout = layout;

  EpochSet epochs(n_trials, n_channels, n_samples, meta, Provenance::file);
  epochs.labels = labels;
  for (double& v : epochs.data) v = r.f32();
  if (r.pos != buf.size()) throw DataError("trailing bytes in " + path);
  return epochs;
}

}  // namespace ssvep
