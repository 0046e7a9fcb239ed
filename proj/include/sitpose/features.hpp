#pragma once

// Joint-angle features: nine angles between skeletal segment vectors, some
// measured against auxiliary points offset from a joint along camera +X,
// followed by the head depth.

#include <array>
#include <cstddef>
#include <variant>
#include <vector>

#include "sitpose/matrix.hpp"
#include "sitpose/skeleton.hpp"

namespace sitpose {

/// Auxiliary points: J at the pelvis, K at the neck, M at the left clavicle,
/// N at the right clavicle.
enum class AuxPoint : std::uint8_t { J, K, M, N };

JointId aux_anchor(AuxPoint p);

using PointRef = std::variant<JointId, AuxPoint>;

struct Segment {
  PointRef from;
  PointRef to;
};

/// Angle between two chained segments.
struct AngleTriple {
  Segment first;
  Segment second;
};

inline constexpr std::size_t kNumAngles = 9;

/// (J->A, A->B), (J->A, A->C), (J->A, A->D), (A->B, B->C), (B->C, C->E),
/// (N->I, I->H), (M->G, G->F), (H->I, I->C), (F->G, G->C).
const std::array<AngleTriple, kNumAngles>& selected_triples();

struct FeatureConfig {
  double aux_offset_mm = 100.0;
  /// Appends head x and y after the head depth (dimension 12 instead of 10).
  bool include_head_xyz = false;

  std::size_t dimension() const { return kNumAngles + (include_head_xyz ? 3 : 1); }
};

struct FeatureVector {
  std::array<double, kNumAngles> angles_deg{};
  double head_depth_mm = 0.0;
  double head_x_mm = 0.0;
  double head_y_mm = 0.0;
  bool has_head_xy = false;

  std::size_t dimension() const { return kNumAngles + (has_head_xy ? 3 : 1); }
  /// angles, head z, then head x, y when present.
  std::vector<double> values() const;
};

/// anchor + (offset, 0, 0). Throws InvalidArgument for joints that carry no
/// auxiliary point.
Vec3 auxiliary_point(const SkeletonFrame& frame, JointId anchor, double offset_mm = 100.0);

Vec3 segment_vector(const Vec3& from, const Vec3& to);

/// Angle in degrees in [0, 180]. Throws
/// DegenerateError("degenerate segment") if either vector has zero norm.
double angle_between(const Vec3& v1, const Vec3& v2);

/// Throws DegenerateError naming the 1-based triple index on coincident joints.
FeatureVector extract_features(const SkeletonFrame& frame, const FeatureConfig& config = {});

/// Feature rows for every frame plus the label codes.
struct FeatureTable {
  Matrix x;
  std::vector<int> y;
};

FeatureTable extract_dataset_features(const Dataset& dataset, const FeatureConfig& config = {});

}  // namespace sitpose
