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

#include "ppaudio/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <set>

#include "ppaudio/error.hpp"
#include "ppaudio/fft.hpp"

namespace ppaudio::features {
namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_scalar_family(std::string_view name) {
  return name == "zcr" || name == "hnr" || name == "peak" || name == "rms" || name == "energy";
}

double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  const double n = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / n);
  }
  return out;
}

}  // namespace

bool is_forbidden(std::string_view name) {
  const std::string lower = lowercase(name);
  for (std::string_view f : kForbiddenFeatures) {
    if (lower == f) return true;
    // Reject derived names too ("mfcc_delta", "pitch_mean", ...).
    if (lower.size() > f.size() && lower.compare(0, f.size(), f) == 0 && lower[f.size()] == '_')
      return true;
  }
  return false;
}

bool is_allowed(std::string_view name) {
  return std::find(kPrivacyAllowlist.begin(), kPrivacyAllowlist.end(), name) != kPrivacyAllowlist.end();
}

std::size_t canonical_dims(std::string_view family, int contrast_bands) {
  if (is_scalar_family(family)) return 1;
  if (family == "spectral_contrast") return 2 * static_cast<std::size_t>(contrast_bands + 1);
  if (is_allowed(family)) return 2;
  if (is_forbidden(family)) fail(ErrorCode::ForbiddenFeature, "ForbiddenFeature(" + std::string(family) + ")");
  fail(ErrorCode::UnknownFeature, "UnknownFeature(" + std::string(family) + ")");
}

FeatureSchema::FeatureSchema(std::vector<SchemaEntry> entries) : entries_(std::move(entries)) {}

FeatureSchema FeatureSchema::default_schema() {
  std::vector<SchemaEntry> entries;
  for (std::string_view name : kPrivacyAllowlist)
    entries.push_back({std::string(name), canonical_dims(name)});
  return FeatureSchema(std::move(entries));
}

FeatureSchema FeatureSchema::from_names(const std::vector<std::string>& names, int contrast_bands) {
  std::vector<SchemaEntry> entries;
  for (const auto& name : names) entries.push_back({name, canonical_dims(name, contrast_bands)});
  FeatureSchema schema(std::move(entries));
  validate_schema(schema, contrast_bands);
  return schema;
}

std::size_t FeatureSchema::total_dims() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.dims;
  return n;
}

std::string FeatureSchema::id() const {
  if (*this == default_schema()) return "ppa27-v1";
  std::string id = "ppa-v1";
  for (const auto& e : entries_) id += ":" + e.name + "/" + std::to_string(e.dims);
  return id;
}

std::vector<std::string> FeatureSchema::dimension_names() const {
  std::vector<std::string> names;
  for (const auto& e : entries_) {
    if (e.dims == 1) {
      names.push_back(e.name);
    } else if (e.name == "spectral_contrast") {
      for (std::size_t b = 0; b < e.dims / 2; ++b) {
        names.push_back(e.name + "_b" + std::to_string(b) + "_mean");
        names.push_back(e.name + "_b" + std::to_string(b) + "_std");
      }
    } else {
      names.push_back(e.name + "_mean");
      names.push_back(e.name + "_std");
    }
  }
  return names;
}

std::vector<std::string> FeatureSchema::dimension_families() const {
  std::vector<std::string> families;
  for (const auto& e : entries_) families.insert(families.end(), e.dims, e.name);
  return families;
}

void validate_schema(const FeatureSchema& schema, int contrast_bands) {
  if (schema.entries().empty()) fail(ErrorCode::SchemaMismatch, "schema has no entries");
  std::set<std::string> seen;
  for (const auto& e : schema.entries()) {
    if (is_forbidden(e.name)) fail(ErrorCode::ForbiddenFeature, "ForbiddenFeature(" + e.name + ")");
    if (!is_allowed(e.name)) fail(ErrorCode::UnknownFeature, "UnknownFeature(" + e.name + ")");
    if (!seen.insert(e.name).second) fail(ErrorCode::SchemaMismatch, "duplicate schema entry " + e.name);
    const std::size_t want = canonical_dims(e.name, contrast_bands);
    if (e.dims != want)
      fail(ErrorCode::SchemaMismatch, e.name + " has " + std::to_string(e.dims) + " dims, expected " +
                                          std::to_string(want));
  }
}

Taper parse_taper(std::string_view name) {
  const std::string lower = lowercase(name);
  if (lower == "hann" || lower == "hanning") return Taper::Hann;
  if (lower == "hamming") return Taper::Hamming;
  if (lower == "rectangular" || lower == "rect" || lower == "none") return Taper::Rectangular;
  fail(ErrorCode::InvalidConfig, "unknown window_fn '" + std::string(name) + "'");
}

std::string_view to_string(Taper taper) {
  switch (taper) {
    case Taper::Hann: return "hann";
    case Taper::Hamming: return "hamming";
    case Taper::Rectangular: return "rectangular";
  }
  return "hann";
}

void SpectralConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (frame_len < 2) fail(ErrorCode::InvalidConfig, "spectral.frame_len must be at least 2");
  if (frame_hop == 0 || frame_hop > frame_len)
    fail(ErrorCode::InvalidConfig, "spectral.frame_hop must satisfy 0 < frame_hop <= frame_len");
  if (contrast_bands < 1) fail(ErrorCode::InvalidConfig, "spectral.contrast_bands must be positive");
  if (!positive(contrast_fmin)) fail(ErrorCode::InvalidConfig, "spectral.contrast_fmin must be positive");
  if (!(contrast_alpha > 0.0 && contrast_alpha <= 0.5))
    fail(ErrorCode::InvalidConfig, "spectral.contrast_alpha must lie in (0, 0.5]");
  if (!(rolloff_pct > 0.0 && rolloff_pct <= 1.0))
    fail(ErrorCode::InvalidConfig, "spectral.rolloff_pct must lie in (0, 1]");
  if (!positive(hnr_fmin) || !positive(hnr_fmax) || !(hnr_fmin < hnr_fmax))
    fail(ErrorCode::InvalidConfig, "spectral.hnr_fmin must be below spectral.hnr_fmax");
  if (!positive(hnr_cap_db)) fail(ErrorCode::InvalidConfig, "spectral.hnr_cap_db must be positive");
  if (!positive(power_floor)) fail(ErrorCode::InvalidConfig, "spectral.power_floor must be positive");
}

void SpectralConfig::validate(int sample_rate) const {
  validate();
  if (sample_rate <= 0) fail(ErrorCode::InvalidConfig, "sample rate must be positive");
  const double nyquist = sample_rate / 2.0;
  if (!(hnr_fmax < nyquist)) fail(ErrorCode::InvalidConfig, "spectral.hnr_fmax must be below Nyquist");
  if (!(contrast_fmin < nyquist))
    fail(ErrorCode::InvalidConfig, "spectral.contrast_fmin must be below Nyquist");
}

// ---- time domain ---------------------------------------------------------

double zcr(std::span<const double> x) {
  if (x.size() < 2) fail(ErrorCode::TooShort, "zcr needs at least two samples");
  int prev = 0;
  std::size_t crossings = 0;
  for (double v : x) {
    const int s = v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++crossings;
    prev = s;
  }
  return static_cast<double>(crossings) / static_cast<double>(x.size() - 1);
}

Amplitude peak_rms_energy(std::span<const double> x) {
  Amplitude a;
  for (double v : x) {
    a.peak = std::max(a.peak, std::abs(v));
    a.energy += v * v;
  }
  if (!x.empty()) a.rms = std::sqrt(a.energy / static_cast<double>(x.size()));
  return a;
}

double hnr(std::span<const double> x, int sample_rate, const SpectralConfig& cfg) {
  cfg.validate(sample_rate);
  const std::size_t n = x.size();
  if (static_cast<double>(n) < 2.0 * sample_rate / cfg.hnr_fmin)
    fail(ErrorCode::TooShort, "hnr: window shorter than two periods of hnr_fmin");

  const double cap = cfg.hnr_cap_db;
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0)) return -cap;

  // Work on a peak-normalized copy so tiny amplitudes do not underflow.
  const auto min_lag = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(sample_rate / cfg.hnr_fmax)));
  const auto max_lag = static_cast<std::size_t>(std::floor(sample_rate / cfg.hnr_fmin));
  const std::size_t nfft = fft::next_pow2(n + max_lag + 2);
  std::vector<double> buf(nfft, 0.0);
  std::vector<double> cumulative(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    buf[i] = x[i] / peak;
    cumulative[i + 1] = cumulative[i] + buf[i] * buf[i];
  }
  std::vector<std::complex<double>> spec(nfft / 2 + 1);
  fft::forward_real(buf, spec);
  for (auto& c : spec) c = std::norm(c);
  fft::inverse_real(spec, buf);

  // r(lag) = sum x[t] x[t+lag] / sqrt(E[0, n-lag) * E[lag, n)), so a strictly
  // periodic signal reaches 1 at its period regardless of window length.
  auto r = [&](std::size_t lag) {
    if (lag == 0 || lag >= n) return 0.0;
    const double head = cumulative[n - lag];
    const double tail = cumulative[n] - cumulative[lag];
    const double denom = std::sqrt(head * tail);
    if (!(denom > 0.0)) return 0.0;
    return buf[lag] / static_cast<double>(nfft) / denom;
  };

  std::size_t best_lag = min_lag;
  double best = r(min_lag);
  for (std::size_t lag = min_lag + 1; lag <= max_lag; ++lag) {
    const double v = r(lag);
    if (v > best) {
      best = v;
      best_lag = lag;
    }
  }
  // Parabolic refinement of the peak between integer lags.
  const double left = r(best_lag - 1);
  const double right = r(best_lag + 1);
  const double curvature = left - 2.0 * best + right;
  if (curvature < 0.0 && left <= best && right <= best) {
    const double delta = 0.5 * (left - right) / curvature;
    best -= 0.25 * (left - right) * delta;
  }

  const double floor = cfg.power_floor;
  const double rstar = std::clamp(finite_or_zero(best), floor, 1.0 - floor);
  const double db = 10.0 * std::log10(rstar / (1.0 - rstar));
  return std::clamp(db, -cap, cap);
}

// ---- spectral ------------------------------------------------------------

std::vector<double> make_taper(Taper taper, std::size_t n) {
  std::vector<double> w(n, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = two_pi * static_cast<double>(i) / static_cast<double>(n);  // periodic
    switch (taper) {
      case Taper::Hann: w[i] = 0.5 - 0.5 * std::cos(phase); break;
      case Taper::Hamming: w[i] = 0.54 - 0.46 * std::cos(phase); break;
      case Taper::Rectangular: break;
    }
  }
  return w;
}

SpectralAnalyzer::SpectralAnalyzer(int sample_rate, const SpectralConfig& cfg)
    : sample_rate_(sample_rate), frame_len_(cfg.frame_len), taper_(make_taper(cfg.window_fn, cfg.frame_len)) {
  if (sample_rate <= 0) fail(ErrorCode::InvalidConfig, "sample rate must be positive");
  freqs_.resize(frame_len_ / 2 + 1);
  for (std::size_t k = 0; k < freqs_.size(); ++k)
    freqs_[k] = static_cast<double>(k) * sample_rate_ / static_cast<double>(frame_len_);
}

PowerSpectrum SpectralAnalyzer::analyze(std::span<const double> frame) const {
  if (frame.size() != frame_len_)
    fail(ErrorCode::LengthMismatch, "power_spectrum: frame has " + std::to_string(frame.size()) +
                                        " samples, expected " + std::to_string(frame_len_));
  std::vector<double> tapered(frame_len_);
  for (std::size_t i = 0; i < frame_len_; ++i) tapered[i] = frame[i] * taper_[i];
  std::vector<std::complex<double>> bins(frame_len_ / 2 + 1);
  fft::forward_real(tapered, bins);
  PowerSpectrum out;
  out.power.resize(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) out.power[k] = std::norm(bins[k]);
  out.freqs = freqs_;
  return out;
}

PowerSpectrum power_spectrum(std::span<const double> frame, int sample_rate, const SpectralConfig& cfg) {
  cfg.validate();
  return SpectralAnalyzer(sample_rate, cfg).analyze(frame);
}

double spectral_centroid(std::span<const double> power, std::span<const double> freqs) {
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    total += power[k];
    weighted += freqs[k] * power[k];
  }
  if (!(total > 0.0)) return 0.0;
  return finite_or_zero(weighted / total);
}

double spectral_bandwidth(std::span<const double> power, std::span<const double> freqs, double centroid) {
  double total = 0.0;
  double spread = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double d = freqs[k] - centroid;
    total += power[k];
    spread += power[k] * d * d;
  }
  if (!(total > 0.0)) return 0.0;
  return finite_or_zero(std::sqrt(std::max(0.0, spread / total)));
}

double spectral_rolloff(std::span<const double> power, std::span<const double> freqs, double pct) {
  double total = 0.0;
  for (double p : power) total += p;
  if (!(total > 0.0)) return 0.0;
  const double target = pct * total;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    cumulative += power[k];
    if (power[k] > 0.0 && cumulative >= target) return freqs[k];
  }
  // Rounding can leave cumulative a hair short of pct == 1; fall back to the
  // highest nonzero bin.
  for (std::size_t k = power.size(); k-- > 0;)
    if (power[k] > 0.0) return freqs[k];
  return 0.0;
}

double spectral_flatness(std::span<const double> power, double power_floor) {
  if (power.empty()) return 1.0;
  double sum = 0.0;
  for (double p : power) sum += p;
  const double n = static_cast<double>(power.size());
  // Log of each bin relative to the arithmetic mean, so a constant spectrum
  // gives exactly 1.
  const double log_mean = std::log(sum / n + power_floor);
  double log_ratio = 0.0;
  for (double p : power) log_ratio += std::log(p + power_floor) - log_mean;
  const double flatness = std::exp(log_ratio / n);
  return std::clamp(finite_or_zero(flatness), 0.0, 1.0);
}

std::vector<double> spectral_contrast(std::span<const double> power, std::span<const double> freqs,
                                      const SpectralConfig& cfg) {
  const std::size_t n_slots = static_cast<std::size_t>(cfg.contrast_bands) + 1;
  const double nyquist = freqs.empty() ? 0.0 : freqs.back();
  if (!(cfg.contrast_fmin < nyquist)) fail(ErrorCode::InvalidConfig, "contrast_fmin must be below Nyquist");

  // Slot b covers [edge[b], edge[b+1]); the last slot runs to Nyquist.
  std::vector<double> edges(n_slots + 1);
  edges[0] = 0.0;
  for (std::size_t b = 1; b <= n_slots; ++b)
    edges[b] = std::min(cfg.contrast_fmin * std::pow(2.0, static_cast<double>(b - 1)), nyquist);
  std::vector<std::vector<double>> slot_bins(n_slots);
  for (std::size_t k = 0; k < power.size(); ++k) {
    std::size_t b = 0;
    while (b + 1 < n_slots && freqs[k] >= edges[b + 1]) ++b;
    slot_bins[b].push_back(power[k]);
  }

  // Pool under-populated slots upward; leftovers at the top join the last pool.
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> pending;
  std::size_t pending_bins = 0;
  for (std::size_t b = 0; b < n_slots; ++b) {
    pending.push_back(b);
    pending_bins += slot_bins[b].size();
    if (pending_bins >= 2) {
      groups.push_back(std::move(pending));
      pending.clear();
      pending_bins = 0;
    }
  }
  if (!pending.empty()) {
    if (groups.empty()) groups.emplace_back();
    groups.back().insert(groups.back().end(), pending.begin(), pending.end());
  }

  const double floor = cfg.power_floor;
  std::vector<double> out(n_slots, 0.0);
  for (const auto& group : groups) {
    std::vector<double> bins;
    for (std::size_t b : group) bins.insert(bins.end(), slot_bins[b].begin(), slot_bins[b].end());
    double contrast = 0.0;
    if (!bins.empty()) {
      std::sort(bins.begin(), bins.end());
      const auto q = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::llround(cfg.contrast_alpha * static_cast<double>(bins.size()))), 1,
          bins.size());
      const double valley = std::accumulate(bins.begin(), bins.begin() + static_cast<std::ptrdiff_t>(q), 0.0) /
                            static_cast<double>(q);
      const double peak = std::accumulate(bins.end() - static_cast<std::ptrdiff_t>(q), bins.end(), 0.0) /
                          static_cast<double>(q);
      contrast = finite_or_zero(10.0 * std::log10((peak + floor) / (valley + floor)));
    }
    for (std::size_t b : group) out[b] = contrast;
  }
  return out;
}

// ---- assembly ------------------------------------------------------------

std::size_t subframe_count(std::size_t n, std::size_t frame_len, std::size_t frame_hop) {
  if (n < frame_len) return 1;
  return (n - frame_len) / frame_hop + 1;
}

FeatureVector extract_window_features(std::span<const double> window, int sample_rate,
                                      const FeatureSchema& schema, const SpectralConfig& cfg) {
  validate_schema(schema, cfg.contrast_bands);
  cfg.validate(sample_rate);
  if (window.size() < 2) fail(ErrorCode::TooShort, "window needs at least two samples");

  auto wants = [&](std::string_view name) {
    return std::any_of(schema.entries().begin(), schema.entries().end(),
                       [&](const SchemaEntry& e) { return e.name == name; });
  };
  const bool any_spectral = wants("spectral_contrast") || wants("spectral_rolloff") ||
                            wants("spectral_flatness") || wants("spectral_bandwidth") ||
                            wants("spectral_centroid");

  const std::size_t n_contrast = static_cast<std::size_t>(cfg.contrast_bands) + 1;
  std::vector<std::vector<double>> contrast(n_contrast);
  std::vector<double> rolloff, flatness, bandwidth, centroid;
  if (any_spectral) {
    const SpectralAnalyzer analyzer(sample_rate, cfg);
    const std::size_t frames = subframe_count(window.size(), cfg.frame_len, cfg.frame_hop);
    std::vector<double> frame(cfg.frame_len);
    for (std::size_t f = 0; f < frames; ++f) {
      std::fill(frame.begin(), frame.end(), 0.0);
      const std::size_t begin = f * cfg.frame_hop;
      const std::size_t end = std::min(begin + cfg.frame_len, window.size());
      std::copy(window.begin() + static_cast<std::ptrdiff_t>(begin),
                window.begin() + static_cast<std::ptrdiff_t>(end), frame.begin());
      const PowerSpectrum ps = analyzer.analyze(frame);
      if (wants("spectral_contrast")) {
        const auto c = spectral_contrast(ps.power, ps.freqs, cfg);
        for (std::size_t b = 0; b < n_contrast; ++b) contrast[b].push_back(c[b]);
      }
      if (wants("spectral_rolloff")) rolloff.push_back(spectral_rolloff(ps.power, ps.freqs, cfg.rolloff_pct));
      if (wants("spectral_flatness")) flatness.push_back(spectral_flatness(ps.power, cfg.power_floor));
      const double c = spectral_centroid(ps.power, ps.freqs);
      if (wants("spectral_centroid")) centroid.push_back(c);
      if (wants("spectral_bandwidth")) bandwidth.push_back(spectral_bandwidth(ps.power, ps.freqs, c));
    }
  }

  const Amplitude amp = peak_rms_energy(window);
  FeatureVector out;
  out.schema_id = schema.id();
  out.values.reserve(schema.total_dims());
  auto push_stats = [&](const std::vector<double>& v) {
    const MeanStd ms = mean_std(v);
    out.values.push_back(ms.mean);
    out.values.push_back(ms.std);
  };
  for (const auto& e : schema.entries()) {
    const std::string& name = e.name;
    if (name == "zcr") out.values.push_back(zcr(window));
    else if (name == "hnr") out.values.push_back(hnr(window, sample_rate, cfg));
    else if (name == "peak") out.values.push_back(amp.peak);
    else if (name == "rms") out.values.push_back(amp.rms);
    else if (name == "energy") out.values.push_back(amp.energy);
    else if (name == "spectral_contrast") for (const auto& band : contrast) push_stats(band);
    else if (name == "spectral_rolloff") push_stats(rolloff);
    else if (name == "spectral_flatness") push_stats(flatness);
    else if (name == "spectral_bandwidth") push_stats(bandwidth);
    else if (name == "spectral_centroid") push_stats(centroid);
  }
  if (out.values.size() != schema.total_dims())
    fail(ErrorCode::Internal, "feature vector length does not match schema");
  for (double v : out.values)
    if (!std::isfinite(v)) fail(ErrorCode::Internal, "non-finite feature value");
  return out;
}

}  // namespace ppaudio::features
