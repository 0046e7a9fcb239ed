#pragma once

// Geometry used by the synthetic skeleton generator.
//
// Body frame: origin at the pelvis, +x toward the subject's left, +y up,
// +z in the direction the subject faces. Millimeters and degrees.

#include <array>

namespace sitpose::synth_constants {

struct Range {
  double lo;
  double hi;
};

/// Neutral upright seated skeleton for a subject of scale 1, in canonical
/// joint order A..I.
inline constexpr std::array<std::array<double, 3>, 9> kNeutralJoints = {{
    {0.0, 0.0, 0.0},       // pelvis
    {0.0, 180.0, -10.0},   // spine navel
    {0.0, 350.0, -15.0},   // spine chest
    {0.0, 560.0, 0.0},     // neck
    {0.0, 650.0, 40.0},    // head
    {170.0, 500.0, 0.0},   // left shoulder
    {40.0, 530.0, 0.0},    // left clavicle
    {-40.0, 530.0, 0.0},   // right clavicle
    {-170.0, 500.0, 0.0},  // right shoulder
}};

/// Per-posture transform ranges. Pitch is a forward tilt of the trunk about
/// the pelvis (negative reclines), lean is a lateral tilt toward the
/// subject's left (negative leans right), flexion bends the upper trunk
/// forward about the spine chest, protraction pushes the shoulders forward.
struct PostureRanges {
  Range pitch_deg;
  Range lean_deg;
  Range flexion_deg;
  Range protraction_mm;
  Range slide_mm;      // pelvis forward (+) or backward (-) shift
  Range drop_mm;       // pelvis lowering
  Range lumbar_mm;     // spine navel forward shift
  double lift_mm;      // pelvis raise (standing only)
};

// Order follows the posture codes.
inline constexpr std::array<PostureRanges, 7> kPostureRanges = {{
    // SittingStraight
    {{-5, 5}, {-4, 4}, {0, 6}, {0, 10}, {-20, 20}, {0, 0}, {-5, 5}, 0.0},
    // HunchingOver
    {{0, 10}, {-4, 4}, {28, 42}, {30, 60}, {-20, 20}, {0, 0}, {10, 25}, 0.0},
    // LeftSitting
    {{-5, 5}, {14, 26}, {0, 8}, {0, 10}, {-20, 20}, {0, 0}, {-5, 5}, 0.0},
    // RightSitting
    {{-5, 5}, {-26, -14}, {0, 8}, {0, 10}, {-20, 20}, {0, 0}, {-5, 5}, 0.0},
    // LeaningForward
    {{25, 40}, {-4, 4}, {0, 10}, {0, 20}, {-20, 20}, {0, 0}, {-5, 5}, 0.0},
    // Lying
    {{-35, -20}, {-4, 4}, {0, 10}, {0, 15}, {80, 150}, {30, 60}, {-5, 5}, 0.0},
    // Standing
    {{-5, 5}, {-4, 4}, {0, 6}, {0, 10}, {-300, -150}, {0, 0}, {-25, -10}, 350.0},
}};

/// Horizontal distance from camera to subject beyond the desk depth.
inline constexpr double kCameraStandoffMm = 350.0;
/// Random subject yaw about the vertical axis.
inline constexpr Range kSubjectYawDeg = {-5.0, 5.0};
/// Random sideways seat displacement.
inline constexpr Range kSeatShiftXMm = {-30.0, 30.0};
/// Simulated participants; each gets a fixed body scale.
inline constexpr int kNumSubjects = 15;
/// Frame spacing written to the timestamp column (30 fps).
inline constexpr long kFramePeriodMs = 33;

}  // namespace sitpose::synth_constants
