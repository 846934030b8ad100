// Copyright 2026 The ppaudio Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ppaudio/audio_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include "ppaudio/error.hpp"

namespace ppaudio::audio {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  bool tag(const char (&expected)[5]) {
    if (remaining() < 4) return false;
    bool match = std::memcmp(bytes_.data() + pos_, expected, 4) == 0;
    pos_ += 4;
    return match;
  }

  std::string fourcc() {
    need(4);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return s;
  }

  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    n = std::min(n, remaining());
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  void skip(std::size_t n) { pos_ += std::min(n, remaining()); }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) fail(ErrorCode::MalformedHeader, "wav: unexpected end of header");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct Format {
  std::uint16_t encoding = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

Format parse_fmt(std::span<const std::uint8_t> chunk) {
  if (chunk.size() < 16) fail(ErrorCode::MalformedHeader, "wav: fmt chunk too short");
  ByteReader r(chunk);
  Format f;
  f.encoding = r.u16();
  f.channels = r.u16();
  f.sample_rate = r.u32();
  r.u32();  // byte rate
  f.block_align = r.u16();
  f.bits = r.u16();
  if (f.encoding == kFormatExtensible) {
    if (chunk.size() < 40) fail(ErrorCode::MalformedHeader, "wav: extensible fmt chunk too short");
    r.u16();  // cbSize
    r.u16();  // valid bits
    r.u32();  // channel mask
    f.encoding = r.u16();  // leading two bytes of the subformat GUID
  }
  return f;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

std::vector<std::uint8_t> wav_header(std::uint16_t encoding, int channels, int sample_rate,
                                     std::uint16_t bits, std::uint32_t data_bytes) {
  if (channels < 1 || channels > 2) fail(ErrorCode::InvalidConfig, "wav: 1 or 2 channels supported");
  if (sample_rate <= 0) fail(ErrorCode::InvalidConfig, "wav: sample rate must be positive");
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  const auto block = static_cast<std::uint16_t>(channels * bits / 8);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, encoding);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * block);
  put_u16(out, block);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  return out;
}

// One pass of the frame classification. Returns the kept samples.
std::vector<double> trim_once(std::span<const double> x, const TrimConfig& cfg) {
  const std::vector<double> rms = frame_rms(x, cfg.frame_len, cfg.hop_len);
  const double loudest = *std::max_element(rms.begin(), rms.end());
  if (!(loudest > 0.0)) return {};
  const double threshold = loudest * std::pow(10.0, -cfg.top_db / 20.0);

  // A sample survives only if no frame covering it is silent.
  std::vector<char> keep(x.size(), 1);
  for (std::size_t k = 0; k < rms.size(); ++k) {
    if (rms[k] >= threshold) continue;
    const std::size_t begin = k * cfg.hop_len;
    const std::size_t end = std::min(begin + cfg.frame_len, x.size());
    std::fill(keep.begin() + static_cast<std::ptrdiff_t>(begin),
              keep.begin() + static_cast<std::ptrdiff_t>(end), 0);
  }
  std::vector<double> out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    if (keep[i]) out.push_back(x[i]);
  return out;
}

}  // namespace

void TrimConfig::validate() const {
  if (!(top_db > 0.0) || !std::isfinite(top_db))
    fail(ErrorCode::InvalidConfig, "trim.top_db must be a positive number");
  if (frame_len == 0 || hop_len == 0)
    fail(ErrorCode::InvalidConfig, "trim.frame_len and trim.hop_len must be positive");
  if (hop_len > frame_len) fail(ErrorCode::InvalidConfig, "trim.hop_len must not exceed trim.frame_len");
}

void WindowConfig::validate() const {
  if (!(window_ms > 0.0) || !std::isfinite(window_ms))
    fail(ErrorCode::InvalidConfig, "window.window_ms must be positive");
  if (!(hop_ms > 0.0) || hop_ms > window_ms)
    fail(ErrorCode::InvalidConfig, "window.hop_ms must satisfy 0 < hop_ms <= window_ms");
}

std::size_t WindowConfig::window_samples(int sample_rate) const {
  return static_cast<std::size_t>(std::llround(window_ms * sample_rate / 1000.0));
}

std::size_t WindowConfig::hop_samples(int sample_rate) const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(hop_ms * sample_rate / 1000.0)));
}

AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string source_id) {
  ByteReader r(bytes);
  if (!r.tag("RIFF")) fail(ErrorCode::MalformedHeader, "wav: missing RIFF magic");
  r.u32();
  if (!r.tag("WAVE")) fail(ErrorCode::MalformedHeader, "wav: missing WAVE form type");

  std::optional<Format> fmt;
  std::optional<std::span<const std::uint8_t>> data;
  while (r.remaining() >= 8) {
    const std::string id = r.fourcc();
    const std::uint32_t size = r.u32();
    if (id == "fmt ") {
      if (size > r.remaining()) fail(ErrorCode::MalformedHeader, "wav: truncated fmt chunk");
      fmt = parse_fmt(r.take(size));
    } else if (id == "data") {
      // Streaming writers leave the size at 0xFFFFFFFF; take what exists.
      data = r.take(size);
    } else {
      r.skip(size);
    }
    if (size % 2 == 1) r.skip(1);
  }
  if (!fmt) fail(ErrorCode::MalformedHeader, "wav: no fmt chunk");
  if (!data) fail(ErrorCode::MalformedHeader, "wav: no data chunk");
  if (fmt->sample_rate == 0) fail(ErrorCode::MalformedHeader, "wav: sample rate is zero");
  if (fmt->channels < 1 || fmt->channels > 2)
    fail(ErrorCode::UnsupportedEncoding,
         "wav: " + std::to_string(fmt->channels) + " channels (1 or 2 supported)");

  const bool pcm16 = fmt->encoding == kFormatPcm && fmt->bits == 16;
  const bool float32 = fmt->encoding == kFormatFloat && fmt->bits == 32;
  if (!pcm16 && !float32)
    fail(ErrorCode::UnsupportedEncoding, "wav: encoding " + std::to_string(fmt->encoding) + " with " +
                                             std::to_string(fmt->bits) +
                                             " bits (PCM16 or float32 supported)");

  const std::size_t bytes_per_sample = fmt->bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
  const std::size_t frames = data->size() / frame_bytes;
  if (frames == 0) fail(ErrorCode::EmptyAudio, "wav: no sample frames");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt->sample_rate);
  clip.source_id = std::move(source_id);
  clip.samples.resize(frames);
  const std::uint8_t* p = data->data();
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt->channels; ++c) {
      const std::uint8_t* s = p + i * frame_bytes + c * bytes_per_sample;
      double v;
      if (pcm16) {
        auto raw = static_cast<std::int16_t>(static_cast<std::uint16_t>(s[0] | (s[1] << 8)));
        v = raw / 32768.0;
      } else {
        std::uint32_t bits = static_cast<std::uint32_t>(s[0]) | (static_cast<std::uint32_t>(s[1]) << 8) |
                             (static_cast<std::uint32_t>(s[2]) << 16) |
                             (static_cast<std::uint32_t>(s[3]) << 24);
        v = std::bit_cast<float>(bits);
        if (!std::isfinite(v)) fail(ErrorCode::NonFiniteSample, "wav: non-finite float sample");
      }
      acc += v;
    }
    clip.samples[i] = fmt->channels == 2 ? acc * 0.5 : acc;
  }
  return clip;
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes, path.stem().string());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav_pcm16(std::span<const double> interleaved, int sample_rate,
                                           int channels) {
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 2);
  auto out = wav_header(kFormatPcm, channels, sample_rate, 16, data_bytes);
  for (double v : interleaved) {
    const double scaled = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  return out;
}

std::vector<std::uint8_t> encode_wav_float32(std::span<const double> interleaved, int sample_rate,
                                             int channels) {
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 4);
  auto out = wav_header(kFormatFloat, channels, sample_rate, 32, data_bytes);
  for (double v : interleaved) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

std::vector<double> frame_rms(std::span<const double> samples, std::size_t frame_len,
                              std::size_t hop_len) {
  const std::size_t n = samples.size();
  std::size_t frames = 1;
  if (n > frame_len) frames = (n - frame_len + hop_len - 1) / hop_len + 1;
  std::vector<double> rms(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    const std::size_t begin = k * hop_len;
    const std::size_t end = std::min(begin + frame_len, n);
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += samples[i] * samples[i];
    rms[k] = end > begin ? std::sqrt(sum / static_cast<double>(end - begin)) : 0.0;
  }
  return rms;
}

AudioClip trim_silence(const AudioClip& clip, const TrimConfig& cfg) {
  cfg.validate();
  AudioClip out{clip.samples, clip.sample_rate, clip.source_id};
  if (out.samples.empty()) fail(ErrorCode::EmptyAfterTrim, "no signal after silence trim");
  while (true) {
    std::vector<double> kept = trim_once(out.samples, cfg);
    if (kept.empty()) fail(ErrorCode::EmptyAfterTrim, "no signal after silence trim");
    if (kept.size() == out.samples.size()) break;
    out.samples = std::move(kept);
  }
  return out;
}

std::size_t window_count(std::size_t n, std::size_t window, std::size_t hop) {
  if (n < window) return 1;
  return (n - window) / hop + 1;
}

std::vector<Window> segment(const AudioClip& clip, const WindowConfig& cfg) {
  cfg.validate();
  if (clip.samples.empty()) fail(ErrorCode::EmptyAudio, "segment: empty clip");
  if (clip.sample_rate <= 0) fail(ErrorCode::InvalidConfig, "segment: sample rate must be positive");
  const std::size_t w = cfg.window_samples(clip.sample_rate);
  const std::size_t h = cfg.hop_samples(clip.sample_rate);
  if (w == 0) fail(ErrorCode::InvalidConfig, "segment: window is shorter than one sample");

  const std::size_t count = window_count(clip.samples.size(), w, h);
  std::vector<Window> windows;
  windows.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Window win;
    win.clip_id = clip.source_id;
    win.index = i;
    win.samples.assign(w, 0.0);
    const std::size_t begin = i * h;
    const std::size_t end = std::min(begin + w, clip.samples.size());
    std::copy(clip.samples.begin() + static_cast<std::ptrdiff_t>(begin),
              clip.samples.begin() + static_cast<std::ptrdiff_t>(end), win.samples.begin());
    windows.push_back(std::move(win));
  }
  return windows;
}

}  // namespace ppaudio::audio
