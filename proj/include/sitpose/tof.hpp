#pragma once

// Continuous-wave time-of-flight depth estimation from four quarter-period
// samples of the received modulated signal.

#include <cstdint>
#include <numbers>

namespace sitpose::tof {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

struct TofConfig {
  double modulation_frequency_hz = 10e6;
  double emitted_amplitude = 1.0;
  double speed_of_light_m_s = kSpeedOfLight;

  /// Throws InvalidArgument unless frequency and amplitude are positive.
  void validate() const;
};

/// Received intensities at t = 0, T/4, T/2, 3T/4.
struct FourPhaseSamples {
  double r0 = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
};

/// a * (1 + sin(2*pi*f*t)).
double emitted_signal(const TofConfig& config, double t_seconds);

/// Samples A*sin(2*pi*f*(t_i - dt)) + (A + B) at t_i = i*T/4, where the
/// delay dt corresponds to `phase_delta` radians.
FourPhaseSamples sample_received(double amplitude, double ambient_offset, double phase_delta,
                                 const TofConfig& config);

/// Same as sample_received with zero-mean Gaussian noise of standard
/// deviation `noise_sigma` added to each sample. Deterministic in `seed`.
FourPhaseSamples sample_received_noisy(double amplitude, double ambient_offset,
                                       double phase_delta, const TofConfig& config,
                                       double noise_sigma, std::uint64_t seed);

/// atan2(r2 - r0, r1 - r3) mapped into [0, 2*pi).
/// Throws DegenerateError("unrecoverable phase") when both differences vanish.
double phase_from_samples(const FourPhaseSamples& samples);

/// c * phase / (4*pi*f), in meters. Throws InvalidArgument for negative or
/// non-finite phase.
double depth_from_phase(double phase, const TofConfig& config);

/// Maximum unambiguous distance c / (2f).
double ambiguity_range(const TofConfig& config);

}  // namespace sitpose::tof
