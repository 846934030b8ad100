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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ppaudio::audio {

/// Mono sample buffer. Samples are nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;
  std::string source_id;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// Frame-RMS silence detection relative to the loudest frame of the clip.
struct TrimConfig {
  double top_db = 20.0;
  std::size_t frame_len = 2048;
  std::size_t hop_len = 512;

  void validate() const;
};

/// Analysis windows; hop = window - overlap (500 ms / 100 ms overlap -> 400 ms).
struct WindowConfig {
  double window_ms = 500.0;
  double hop_ms = 400.0;

  void validate() const;
  std::size_t window_samples(int sample_rate) const;
  std::size_t hop_samples(int sample_rate) const;
};

struct Window {
  std::vector<double> samples;
  std::string clip_id;
  std::size_t index = 0;
};

// Accepts RIFF/WAVE with PCM 16-bit or IEEE float 32-bit, one or two channels
// (WAVE_FORMAT_EXTENSIBLE wrapping either is accepted). Stereo is averaged.
AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string source_id = {});
AudioClip read_wav(const std::filesystem::path& path);

/// Interleaved samples when channels == 2. Values are clamped to [-1, 32767/32768].
std::vector<std::uint8_t> encode_wav_pcm16(std::span<const double> interleaved, int sample_rate,
                                           int channels = 1);
std::vector<std::uint8_t> encode_wav_float32(std::span<const double> interleaved,
                                             int sample_rate, int channels = 1);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Per-frame RMS over frames at offsets 0, hop, 2*hop, ...; the last frame is
/// clipped at the end of the buffer so every sample is covered.
std::vector<double> frame_rms(std::span<const double> samples, std::size_t frame_len,
                              std::size_t hop_len);

/// Drops samples that fall inside any frame quieter than -top_db relative to
/// the loudest frame, concatenating what remains. Repeated until stable, so
/// trim_silence(trim_silence(x)) == trim_silence(x).
/// Throws EmptyAfterTrim when nothing survives.
AudioClip trim_silence(const AudioClip& clip, const TrimConfig& cfg);

/// Number of windows segment() emits for a clip of n samples.
std::size_t window_count(std::size_t n, std::size_t window, std::size_t hop);

std::vector<Window> segment(const AudioClip& clip, const WindowConfig& cfg);

}  // namespace ppaudio::audio
