#include "sitpose/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sitpose/error.hpp"

namespace sitpose {

namespace {

using enum JointId;

constexpr Segment seg(PointRef from, PointRef to) { return {from, to}; }

const std::array<AngleTriple, kNumAngles> kTriples = {{
    {seg(AuxPoint::J, Pelvis), seg(Pelvis, SpineNavel)},
    {seg(AuxPoint::J, Pelvis), seg(Pelvis, SpineChest)},
    {seg(AuxPoint::J, Pelvis), seg(Pelvis, Neck)},
    {seg(Pelvis, SpineNavel), seg(SpineNavel, SpineChest)},
    {seg(SpineNavel, SpineChest), seg(SpineChest, Head)},
    {seg(AuxPoint::N, RightShoulder), seg(RightShoulder, RightClavicle)},
    {seg(AuxPoint::M, LeftClavicle), seg(LeftClavicle, LeftShoulder)},
    {seg(RightClavicle, RightShoulder), seg(RightShoulder, SpineChest)},
    {seg(LeftShoulder, LeftClavicle), seg(LeftClavicle, SpineChest)},
}};

Vec3 resolve(const SkeletonFrame& frame, const PointRef& ref, double offset) {
  if (const auto* j = std::get_if<JointId>(&ref)) return frame[*j];
  return auxiliary_point(frame, aux_anchor(std::get<AuxPoint>(ref)), offset);
}

}  // namespace

JointId aux_anchor(AuxPoint p) {
  switch (p) {
    case AuxPoint::J: return Pelvis;
    case AuxPoint::K: return Neck;
    case AuxPoint::M: return LeftClavicle;
    case AuxPoint::N: return RightClavicle;
  }
  throw InvalidArgument("unknown auxiliary point");
}

const std::array<AngleTriple, kNumAngles>& selected_triples() { return kTriples; }

std::vector<double> FeatureVector::values() const {
  std::vector<double> v(angles_deg.begin(), angles_deg.end());
  v.push_back(head_depth_mm);
  if (has_head_xy) {
    v.push_back(head_x_mm);
    v.push_back(head_y_mm);
  }
  return v;
}

Vec3 auxiliary_point(const SkeletonFrame& frame, JointId anchor, double offset_mm) {
  if (anchor != Pelvis && anchor != Neck && anchor != LeftClavicle && anchor != RightClavicle) {
    throw InvalidArgument("no auxiliary point is defined at " + std::string(joint_name(anchor)));
  }
  if (!(offset_mm > 0.0)) throw InvalidArgument("auxiliary offset must be positive");
  return frame[anchor] + Vec3{offset_mm, 0.0, 0.0};
}

Vec3 segment_vector(const Vec3& from, const Vec3& to) { return to - from; }

double angle_between(const Vec3& v1, const Vec3& v2) {
  const double n1 = v1.norm();
  const double n2 = v2.norm();
  if (!(n1 > 0.0) || !(n2 > 0.0)) throw DegenerateError("degenerate segment");
  // Same angle as arccos of the clamped cosine, without its loss of
  // precision near 0 and 180 degrees.
  const Vec3 c{v1.y * v2.z - v1.z * v2.y, v1.z * v2.x - v1.x * v2.z, v1.x * v2.y - v1.y * v2.x};
  return std::atan2(c.norm(), v1.dot(v2)) * 180.0 / std::numbers::pi;
}

FeatureVector extract_features(const SkeletonFrame& frame, const FeatureConfig& config) {
  FeatureVector fv;
  for (std::size_t i = 0; i < kNumAngles; ++i) {
    const AngleTriple& t = kTriples[i];
    const Vec3 v1 = segment_vector(resolve(frame, t.first.from, config.aux_offset_mm),
                                   resolve(frame, t.first.to, config.aux_offset_mm));
    const Vec3 v2 = segment_vector(resolve(frame, t.second.from, config.aux_offset_mm),
                                   resolve(frame, t.second.to, config.aux_offset_mm));
    try {
      fv.angles_deg[i] = angle_between(v1, v2);
    } catch (const DegenerateError&) {
      throw DegenerateError("degenerate segment in angle triple " + std::to_string(i + 1));
    }
  }
  const Vec3& head = frame[Head];
  fv.head_depth_mm = head.z;
  if (config.include_head_xyz) {
    fv.has_head_xy = true;
    fv.head_x_mm = head.x;
    fv.head_y_mm = head.y;
  }
  return fv;
}

FeatureTable extract_dataset_features(const Dataset& dataset, const FeatureConfig& config) {
  FeatureTable table{Matrix(dataset.size(), config.dimension()), {}};
  table.y.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto values = extract_features(dataset[i].frame, config).values();
    std::copy(values.begin(), values.end(), table.x.row(i).begin());
    table.y.push_back(label_code(dataset[i].label));
  }
  return table;
}

}  // namespace sitpose
