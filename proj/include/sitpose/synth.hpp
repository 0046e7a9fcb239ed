#pragma once

// Synthetic labeled skeleton frames for the seven postures, seen by an
// oblique depth camera beside the desk.

#include <array>
#include <cstddef>
#include <cstdint>

#include "sitpose/skeleton.hpp"

namespace sitpose {

enum class CameraSide : std::uint8_t { Left, Right };

struct CameraSetup {
  CameraSide side = CameraSide::Left;
  /// Height of the optical center above the pelvis.
  double elevation_mm = 550.0;
  double yaw_deg = 45.0;
  double desk_depth_mm = 720.0;
};

struct SynthConfig {
  std::uint64_t seed = 42;
  ClassCounts per_class{};
  double scale_min = 0.85;
  double scale_max = 1.05;
  double jitter_sigma_mm = 5.0;
  CameraSetup camera;
  /// Seat shift, subject yaw and per-posture ranges are sampled when true;
  /// when false every posture uses the midpoint of its ranges.
  bool vary_pose = true;

  static SynthConfig uniform(std::size_t per_class, std::uint64_t seed = 42);
  /// Throws InvalidArgument on a zero total, negative sigma or a bad scale
  /// range.
  void validate() const;
};

/// Rigid transform from the body frame into the camera frame.
struct CameraPose {
  Vec3 position;  // body frame
  Vec3 x_axis;
  Vec3 y_axis;
  Vec3 z_axis;
  Vec3 to_camera(const Vec3& body) const;
};
CameraPose camera_pose(const CameraSetup& camera);

/// Neutral skeleton (body frame) at the given scale.
std::array<Vec3, kNumJoints> neutral_skeleton(double scale);

/// Frame `index` of the generated sequence; depends only on (config, label,
/// index).
LabeledFrame synth_frame(const SynthConfig& config, PostureLabel label, std::uint64_t index);

/// Frames grouped by posture code, per_class[c] of each. Row i uses random
/// substream i.
Dataset generate(const SynthConfig& config);

/// Stateless 64-bit mixer used to derive per-frame random streams.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace sitpose
