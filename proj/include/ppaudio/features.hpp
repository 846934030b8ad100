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

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppaudio/audio_io.hpp"

namespace ppaudio::features {

// Feature families that may appear in a schema. Anything that lets speech
// content or speaker identity be recovered (cepstra, spectrogram frames,
// pitch, formants) is refused at schema validation time rather than merely
// left unused: there is no extractor for it in this library.
inline constexpr std::array<std::string_view, 10> kPrivacyAllowlist = {
    "zcr",  "hnr", "peak", "rms", "energy", "spectral_contrast", "spectral_rolloff",
    "spectral_flatness", "spectral_bandwidth", "spectral_centroid"};

inline constexpr std::array<std::string_view, 7> kForbiddenFeatures = {
    "f0", "pitch", "formants", "mfcc", "mel_spectrogram", "stft_frames", "linear_spectrogram"};

inline constexpr int kDefaultContrastBands = 6;

bool is_forbidden(std::string_view name);
bool is_allowed(std::string_view name);

/// Dimensions a family contributes. Window-level scalars give 1; sub-frame
/// spectral descriptors give (mean, std), and contrast gives that per band.
std::size_t canonical_dims(std::string_view family, int contrast_bands = kDefaultContrastBands);

struct SchemaEntry {
  std::string name;
  std::size_t dims = 0;

  bool operator==(const SchemaEntry&) const = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<SchemaEntry> entries);

  /// zcr, hnr, peak, rms, energy, then contrast(14), rolloff, flatness,
  /// bandwidth, centroid as (mean, std): 27 dimensions.
  static FeatureSchema default_schema();

  /// Canonical dims for each name; validates the result.
  static FeatureSchema from_names(const std::vector<std::string>& names,
                                  int contrast_bands = kDefaultContrastBands);

  const std::vector<SchemaEntry>& entries() const { return entries_; }
  std::size_t total_dims() const;
  std::string id() const;

  /// Column names, e.g. "spectral_contrast_b3_mean".
  std::vector<std::string> dimension_names() const;
  /// Family name for each dimension, same order as dimension_names().
  std::vector<std::string> dimension_families() const;

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<SchemaEntry> entries_;
};

/// Throws ForbiddenFeature, UnknownFeature or SchemaMismatch.
void validate_schema(const FeatureSchema& schema, int contrast_bands = kDefaultContrastBands);

struct FeatureVector {
  std::vector<double> values;
  std::string schema_id;
};

enum class Taper { Hann, Hamming, Rectangular };

Taper parse_taper(std::string_view name);
std::string_view to_string(Taper taper);

struct SpectralConfig {
  std::size_t frame_len = 2048;
  std::size_t frame_hop = 1024;
  Taper window_fn = Taper::Hann;
  int contrast_bands = kDefaultContrastBands;
  double contrast_fmin = 200.0;
  double contrast_alpha = 0.02;
  double rolloff_pct = 0.85;
  double hnr_fmin = 60.0;
  double hnr_fmax = 500.0;
  double hnr_cap_db = 40.0;
  double power_floor = 1e-10;

  /// Rate-independent checks.
  void validate() const;
  /// Adds the checks that depend on the sample rate (Nyquist bounds).
  void validate(int sample_rate) const;
};

// ---- time domain ---------------------------------------------------------

/// Fraction of adjacent pairs with strictly opposite sign; zeros take the sign
/// of the previous nonzero sample. Throws TooShort below two samples.
double zcr(std::span<const double> x);

struct Amplitude {
  double peak = 0.0;
  double rms = 0.0;
  double energy = 0.0;
};

Amplitude peak_rms_energy(std::span<const double> x);

/// Harmonic-to-noise ratio in dB from the normalized autocorrelation peak in
/// the lag range [sr/hnr_fmax, sr/hnr_fmin], clamped to +-hnr_cap_db.
/// All-zero input yields -hnr_cap_db.
double hnr(std::span<const double> x, int sample_rate, const SpectralConfig& cfg);

// ---- spectral ------------------------------------------------------------

struct PowerSpectrum {
  std::vector<double> power;  // frame_len / 2 + 1 bins
  std::vector<double> freqs;  // Hz
};

std::vector<double> make_taper(Taper taper, std::size_t n);

/// Holds the taper for one (sample rate, config) so frames can be analysed
/// without recomputing it.
class SpectralAnalyzer {
 public:
  SpectralAnalyzer(int sample_rate, const SpectralConfig& cfg);

  PowerSpectrum analyze(std::span<const double> frame) const;
  const std::vector<double>& taper() const { return taper_; }

 private:
  int sample_rate_;
  std::size_t frame_len_;
  std::vector<double> taper_;
  std::vector<double> freqs_;
};

/// Throws LengthMismatch when frame.size() != cfg.frame_len.
PowerSpectrum power_spectrum(std::span<const double> frame, int sample_rate,
                             const SpectralConfig& cfg);

double spectral_centroid(std::span<const double> power, std::span<const double> freqs);
double spectral_bandwidth(std::span<const double> power, std::span<const double> freqs,
                          double centroid);
double spectral_rolloff(std::span<const double> power, std::span<const double> freqs, double pct);
double spectral_flatness(std::span<const double> power, double power_floor = 1e-10);

/// Octave-band peak/valley contrast in dB, contrast_bands + 1 values (the
/// first band is everything below contrast_fmin, the last runs to Nyquist).
/// Bands holding fewer than two bins are pooled with the band above; each
/// pooled slot reports the pooled value.
std::vector<double> spectral_contrast(std::span<const double> power, std::span<const double> freqs,
                                      const SpectralConfig& cfg);

// ---- assembly ------------------------------------------------------------

std::size_t subframe_count(std::size_t n, std::size_t frame_len, std::size_t frame_hop);

FeatureVector extract_window_features(std::span<const double> window, int sample_rate,
                                      const FeatureSchema& schema, const SpectralConfig& cfg);

inline FeatureVector extract_window_features(const audio::Window& window, int sample_rate,
                                             const FeatureSchema& schema,
                                             const SpectralConfig& cfg) {
  return extract_window_features(std::span<const double>(window.samples), sample_rate, schema, cfg);
}

}  // namespace ppaudio::features
