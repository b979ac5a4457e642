#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "erpforge/bdf.hpp"
#include "erpforge/errors.hpp"
#include "erpforge/tensor.hpp"

namespace erpforge::dsp {

// One second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 0, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

struct BandpassFilter {
  double low_hz = 0, high_hz = 0;
  int order = 0;
  double sample_rate_hz = 0;
  std::vector<Biquad> sections;
};

// Epoched window of the continuous recording, all channels, physical units.
struct Epoch {
  Tensor<double> data;  // (channels, samples)
  std::int64_t onset_sample = 0;
  int label = 0;
};

// Downsampled trial ready for spatial processing / model input.
// data is (channels, time) or (channels, time, depth) after augmentation.
struct Trial {
  Tensor<float> data;
  int label = 0;
};

namespace detail {

using cplx = std::complex<double>;

// Analog Butterworth lowpass prototype: unit cutoff, poles on the left unit
// semicircle, no zeros, gain 1.
inline std::vector<cplx> butterworth_prototype_poles(int order) {
  std::vector<cplx> poles;
  poles.reserve(static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + 1.0) / (2.0 * order);
    poles.emplace_back(-std::sin(theta), std::cos(theta));
  }
  return poles;
}

}  // namespace detail

// Designs the digital bandpass by warping the band edges, transforming the
// analog lowpass prototype to a bandpass, and applying the bilinear
// transform. Every section keeps the exact (1, 0, -1) bandpass numerator so
// the DC gain is identically zero; the overall gain is spread evenly over
// the cascade.
inline BandpassFilter design_butterworth_bandpass(double low_hz, double high_hz, int order,
                                                  double sample_rate_hz) {
  if (!(low_hz > 0) || !(low_hz < high_hz) || !(high_hz < sample_rate_hz / 2))
    throw InvalidBand("band edges must satisfy 0 < low < high < fs/2");
  if (order < 2 || order % 2 != 0) throw InvalidBand("filter order must be even and >= 2");

  using detail::cplx;
  const double fs2 = 2.0 * sample_rate_hz;
  const double w1 = fs2 * std::tan(std::numbers::pi * low_hz / sample_rate_hz);
  const double w2 = fs2 * std::tan(std::numbers::pi * high_hz / sample_rate_hz);
  const double bw = w2 - w1;
  const double w0_sq = w1 * w2;

  // Lowpass -> bandpass doubles the pole count; gain picks up bw^order.
  std::vector<cplx> analog_poles;
  for (const cplx& p : detail::butterworth_prototype_poles(order)) {
    const cplx scaled = p * (bw / 2.0);
    const cplx root = std::sqrt(scaled * scaled - w0_sq);
    analog_poles.push_back(scaled + root);
    analog_poles.push_back(scaled - root);
  }

  // Bilinear transform. The analog gain bw^order cancels against the
  // (fs2 - s) products; N zeros at s=0 map to z=+1 and the degree deficit
  // contributes N zeros at z=-1.
  std::vector<cplx> digital_poles;
  cplx denom_prod = 1.0;
  for (const cplx& s : analog_poles) {
    digital_poles.push_back((fs2 + s) / (fs2 - s));
    denom_prod *= fs2 - s;
  }
  // zeros at s=0: numerator product over (fs2 - 0) = fs2^order
  const double num_prod = std::pow(fs2, order);
  const cplx gain_c = std::pow(bw, order) * num_prod / denom_prod;
  double gain = gain_c.real();

  // Pair conjugate poles into second-order sections (order sections total).
  std::vector<cplx> upper;
  std::vector<double> reals;
  for (const cplx& p : digital_poles) {
    if (p.imag() > 1e-12)
      upper.push_back(p);
    else if (p.imag() >= -1e-12)
      reals.push_back(p.real());
  }
  std::sort(upper.begin(), upper.end(),
            [](const cplx& a, const cplx& b) { return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a.real() < b.real(); });
  std::sort(reals.begin(), reals.end());

  BandpassFilter f;
  f.low_hz = low_hz;
  f.high_hz = high_hz;
  f.order = order;
  f.sample_rate_hz = sample_rate_hz;

  const double section_gain = std::pow(std::abs(gain), 1.0 / order);
  auto push_section = [&](double a1, double a2) {
    Biquad bq;
    const double g = f.sections.empty() && gain < 0 ? -section_gain : section_gain;
    bq.b0 = g;
    bq.b1 = 0.0;
    bq.b2 = -g;
    bq.a1 = a1;
    bq.a2 = a2;
    f.sections.push_back(bq);
  };
  for (const cplx& p : upper) push_section(-2.0 * p.real(), std::norm(p));
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2)
    push_section(-(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]);

  if (static_cast<int>(f.sections.size()) != order)
    throw InvalidBand("pole pairing failed; band too extreme for this order");
  for (const Biquad& s : f.sections) {
    // roots of z^2 + a1 z + a2 must stay inside the unit circle
    if (!(std::abs(s.a2) < 1.0 && std::abs(s.a1) < 1.0 + s.a2))
      throw InvalidBand("unstable section; band too close to 0 or Nyquist for this sample rate");
  }
  return f;
}

// Causal single-pass cascade, direct form II transposed, zero initial state.
inline std::vector<double> filter_apply(const BandpassFilter& filter, const std::vector<double>& signal) {
  std::vector<double> y(signal);
  for (const Biquad& s : filter.sections) {
    double w1 = 0.0, w2 = 0.0;
    for (double& v : y) {
      const double x = v;
      const double out = s.b0 * x + w1;
      w1 = s.b1 * x - s.a1 * out + w2;
      w2 = s.b2 * x - s.a2 * out;
      v = out;
    }
  }
  return y;
}

inline void filter_apply_in_place(const BandpassFilter& filter, bdf::RawRecording& recording) {
  for (auto& ch : recording.samples) ch = filter_apply(filter, ch);
}

struct EpochSet {
  std::vector<Epoch> epochs;
  int dropped = 0;  // events whose window overruns the recording
};

inline EpochSet extract_epochs(const bdf::RawRecording& recording,
                               const std::vector<bdf::LabeledEvent>& events, double window_s = 1.0) {
  const auto t_raw = static_cast<std::int64_t>(std::llround(window_s * recording.sample_rate_hz));
  if (t_raw < 1) throw TooShort("epoch window shorter than one sample");
  const std::int64_t total = recording.total_samples();
  const int n_ch = recording.channel_count();

  EpochSet out;
  for (const auto& ev : events) {
    if (ev.sample_index < 0 || ev.sample_index + t_raw > total) {
      ++out.dropped;
      continue;
    }
    Epoch e;
    e.onset_sample = ev.sample_index;
    e.label = ev.label;
    e.data = Tensor<double>({n_ch, static_cast<int>(t_raw)});
    for (int c = 0; c < n_ch; ++c) {
      const double* src = recording.samples[static_cast<std::size_t>(c)].data() + ev.sample_index;
      double* dst = e.data.data() + static_cast<std::int64_t>(c) * t_raw;
      std::copy(src, src + t_raw, dst);
    }
    out.epochs.push_back(std::move(e));
  }
  return out;
}

// Averages over contiguous windows down to n_points. When n_points does not
// divide the input length, the leading (length mod n_points) windows take one
// extra sample each.
inline Trial downsample_mean(const Epoch& epoch, int n_points = 64) {
  const int n_ch = epoch.data.dim(0);
  const int t_raw = epoch.data.dim(1);
  if (t_raw < n_points)
    throw TooShort("epoch has " + std::to_string(t_raw) + " samples; need at least " + std::to_string(n_points));

  const int base = t_raw / n_points;
  const int remainder = t_raw % n_points;

  Trial trial;
  trial.label = epoch.label;
  trial.data = Tensor<float>({n_ch, n_points});
  for (int c = 0; c < n_ch; ++c) {
    const double* src = epoch.data.data() + static_cast<std::int64_t>(c) * t_raw;
    std::int64_t pos = 0;
    for (int w = 0; w < n_points; ++w) {
      const int len = base + (w < remainder ? 1 : 0);
      double acc = 0.0;
      for (int i = 0; i < len; ++i) acc += src[pos + i];
      trial.data(c, w) = static_cast<float>(acc / len);
      pos += len;
    }
  }
  return trial;
}

// Per-trial z-score with moments pooled over every element of the tensor
// (population standard deviation, epsilon-guarded).
inline Trial zscore_trial(const Trial& trial) {
  constexpr double kEps = 1e-8;
  const std::int64_t n = trial.data.size();
  double mean = 0.0;
  for (std::int64_t i = 0; i < n; ++i) mean += trial.data[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = trial.data[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  const double denom = std::sqrt(var) + kEps;

  Trial out;
  out.label = trial.label;
  out.data = Tensor<float>(trial.data.shape());
  for (std::int64_t i = 0; i < n; ++i)
    out.data[i] = static_cast<float>((trial.data[i] - mean) / denom);
  return out;
}

}  // namespace erpforge::dsp
