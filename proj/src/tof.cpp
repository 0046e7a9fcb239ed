#include "sitpose/tof.hpp"

#include <cmath>
#include <random>

#include "sitpose/error.hpp"

namespace sitpose::tof {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void TofConfig::validate() const {
  if (!(modulation_frequency_hz > 0.0) || !std::isfinite(modulation_frequency_hz)) {
    throw InvalidArgument("modulation frequency must be positive");
  }
  if (!(emitted_amplitude > 0.0) || !std::isfinite(emitted_amplitude)) {
    throw InvalidArgument("emitted amplitude must be positive");
  }
}

double emitted_signal(const TofConfig& config, double t_seconds) {
  config.validate();
  return config.emitted_amplitude *
         (1.0 + std::sin(kTwoPi * config.modulation_frequency_hz * t_seconds));
}

FourPhaseSamples sample_received(double amplitude, double ambient_offset, double phase_delta,
                                 const TofConfig& config) {
  config.validate();
  if (!(amplitude > 0.0)) throw InvalidArgument("received amplitude must be positive");
  // sin(i*pi/2 - dphi) expanded per quarter period.
  const double s = std::sin(phase_delta);
  const double c = std::cos(phase_delta);
  const double dc = amplitude + ambient_offset;
  return {dc - amplitude * s, dc + amplitude * c, dc + amplitude * s, dc - amplitude * c};
}

FourPhaseSamples sample_received_noisy(double amplitude, double ambient_offset,
                                       double phase_delta, const TofConfig& config,
                                       double noise_sigma, std::uint64_t seed) {
  if (noise_sigma < 0.0) throw InvalidArgument("noise sigma must be non-negative");
  FourPhaseSamples s = sample_received(amplitude, ambient_offset, phase_delta, config);
  if (noise_sigma == 0.0) return s;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma);
  s.r0 += noise(rng);
  s.r1 += noise(rng);
  s.r2 += noise(rng);
  s.r3 += noise(rng);
  return s;
}

double phase_from_samples(const FourPhaseSamples& samples) {
  const double num = samples.r2 - samples.r0;
  const double den = samples.r1 - samples.r3;
  if (num == 0.0 && den == 0.0) throw DegenerateError("unrecoverable phase");
  double phase = std::atan2(num, den);
  if (phase < 0.0) phase += kTwoPi;
  // atan2 of a tiny negative value can round up to exactly 2*pi.
  if (phase >= kTwoPi) phase = 0.0;
  return phase;
}

double depth_from_phase(double phase, const TofConfig& config) {
  config.validate();
  if (!(phase >= 0.0) || !std::isfinite(phase)) {
    throw InvalidArgument("phase must be a non-negative finite angle");
  }
  return config.speed_of_light_m_s * phase / (2.0 * kTwoPi * config.modulation_frequency_hz);
}

double ambiguity_range(const TofConfig& config) {
  config.validate();
  return config.speed_of_light_m_s / (2.0 * config.modulation_frequency_hz);
}

}  // namespace sitpose::tof
