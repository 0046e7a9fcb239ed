#include "sitpose/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "sitpose/error.hpp"
#include "sitpose/synth_constants.hpp"

namespace sitpose {

namespace sc = synth_constants;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Rotations about axes through `pivot`.
Vec3 rotate_x(const Vec3& p, const Vec3& pivot, double rad) {
  const Vec3 d = p - pivot;
  const double c = std::cos(rad), s = std::sin(rad);
  return pivot + Vec3{d.x, d.y * c - d.z * s, d.y * s + d.z * c};
}

Vec3 rotate_z(const Vec3& p, const Vec3& pivot, double rad) {
  const Vec3 d = p - pivot;
  const double c = std::cos(rad), s = std::sin(rad);
  return pivot + Vec3{d.x * c + d.y * s, -d.x * s + d.y * c, d.z};
}

Vec3 rotate_y(const Vec3& p, double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  return {p.x * c + p.z * s, p.y, -p.x * s + p.z * c};
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

class Sampler {
 public:
  Sampler(std::uint64_t seed, bool vary) : rng_(seed), vary_(vary) {}
  double pick(sc::Range r) {
    if (!vary_) return 0.5 * (r.lo + r.hi);
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng_);
  }
  double uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  double normal(double sigma) {
    if (sigma == 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sigma)(rng_);
  }
  int subject() { return std::uniform_int_distribution<int>(1, sc::kNumSubjects)(rng_); }

 private:
  std::mt19937_64 rng_;
  bool vary_;
};

double subject_scale(const SynthConfig& config, int subject) {
  if (config.scale_min == config.scale_max) return config.scale_min;
  std::mt19937_64 rng(splitmix64(config.seed ^ (0xa5a5a5a5ULL + static_cast<std::uint64_t>(subject))));
  return std::uniform_real_distribution<double>(config.scale_min, config.scale_max)(rng);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SynthConfig SynthConfig::uniform(std::size_t per_class, std::uint64_t seed) {
  SynthConfig c;
  c.seed = seed;
  c.per_class.fill(per_class);
  return c;
}

void SynthConfig::validate() const {
  std::size_t total = 0;
  for (auto n : per_class) total += n;
  if (total == 0) throw InvalidArgument("total frame count must be at least 1");
  if (!(jitter_sigma_mm >= 0.0) || !std::isfinite(jitter_sigma_mm)) {
    throw InvalidArgument("joint jitter sigma must be non-negative");
  }
  if (!(scale_min > 0.0) || !(scale_max >= scale_min) || !std::isfinite(scale_max)) {
    throw InvalidArgument("subject scale range must be positive and ordered");
  }
  if (!(camera.elevation_mm >= 0.0) || !(camera.desk_depth_mm >= 0.0) ||
      !(std::abs(camera.yaw_deg) < 90.0)) {
    throw InvalidArgument("camera setup out of range");
  }
}

Vec3 CameraPose::to_camera(const Vec3& body) const {
  const Vec3 d = body - position;
  return {x_axis.dot(d), y_axis.dot(d), z_axis.dot(d)};
}

CameraPose camera_pose(const CameraSetup& camera) {
  const double side = camera.side == CameraSide::Left ? 1.0 : -1.0;
  const double s = std::sin(camera.yaw_deg * kDeg), c = std::cos(camera.yaw_deg * kDeg);
  const double reach = camera.desk_depth_mm + sc::kCameraStandoffMm;
  CameraPose pose;
  pose.position = {side * s * reach, camera.elevation_mm, c * reach};
  pose.z_axis = {-side * s, 0.0, -c};
  pose.y_axis = {0.0, -1.0, 0.0};
  pose.x_axis = cross(pose.y_axis, pose.z_axis);
  return pose;
}

std::array<Vec3, kNumJoints> neutral_skeleton(double scale) {
  std::array<Vec3, kNumJoints> joints;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const auto& p = sc::kNeutralJoints[j];
    joints[j] = scale * Vec3{p[0], p[1], p[2]};
  }
  return joints;
}

LabeledFrame synth_frame(const SynthConfig& config, PostureLabel label, std::uint64_t index) {
  Sampler rnd(splitmix64(config.seed ^ splitmix64(index)), config.vary_pose);
  const auto& r = sc::kPostureRanges[static_cast<std::size_t>(label)];

  const int subject = config.vary_pose ? rnd.subject() : 1;
  const double scale = subject_scale(config, subject);
  auto j = neutral_skeleton(scale);
  auto at = [&](JointId id) -> Vec3& { return j[static_cast<std::size_t>(id)]; };

  const double pitch = rnd.pick(r.pitch_deg) * kDeg;
  const double lean = rnd.pick(r.lean_deg) * kDeg;
  const double flexion = rnd.pick(r.flexion_deg) * kDeg;
  const double protraction = rnd.pick(r.protraction_mm) * scale;
  const double slide = rnd.pick(r.slide_mm);
  const double drop = rnd.pick(r.drop_mm);
  const double lumbar = rnd.pick(r.lumbar_mm) * scale;
  const double yaw = rnd.pick(sc::kSubjectYawDeg) * kDeg;
  const double shift_x = rnd.pick(sc::kSeatShiftXMm);

  at(JointId::SpineNavel).z += lumbar;

  // Upper trunk bends about the spine chest.
  const Vec3 chest = at(JointId::SpineChest);
  for (JointId id : {JointId::Neck, JointId::Head, JointId::LeftShoulder, JointId::LeftClavicle,
                     JointId::RightClavicle, JointId::RightShoulder}) {
    at(id) = rotate_x(at(id), chest, flexion);
  }
  at(JointId::LeftShoulder).z += protraction;
  at(JointId::RightShoulder).z += protraction;
  at(JointId::LeftClavicle).z += 0.5 * protraction;
  at(JointId::RightClavicle).z += 0.5 * protraction;

  // Whole trunk tilts about the pelvis.
  const Vec3 pelvis = at(JointId::Pelvis);
  for (auto& p : j) p = rotate_z(rotate_x(p, pelvis, pitch), pelvis, lean);

  for (auto& p : j) {
    p = rotate_y(p, yaw);
    p = p + Vec3{shift_x, r.lift_mm - drop, slide};
  }

  const CameraPose cam = camera_pose(config.camera);
  LabeledFrame out;
  out.label = label;
  out.subject_id = subject;
  out.frame.timestamp_ms = static_cast<std::int64_t>(index) * sc::kFramePeriodMs;
  for (std::size_t k = 0; k < kNumJoints; ++k) {
    Vec3 c = cam.to_camera(j[k]);
    c = c + Vec3{rnd.normal(config.jitter_sigma_mm), rnd.normal(config.jitter_sigma_mm),
                 rnd.normal(config.jitter_sigma_mm)};
    out.frame.positions[k] = c;
  }
  if (auto err = out.frame.validation_error()) {
    throw InvalidArgument("synthetic frame " + std::to_string(index) + " invalid: " + *err);
  }
  return out;
}

Dataset generate(const SynthConfig& config) {
  config.validate();
  Dataset ds;
  std::size_t total = 0;
  for (auto n : config.per_class) total += n;
  ds.reserve(total);
  std::uint64_t index = 0;
  for (PostureLabel label : kAllPostures) {
    for (std::size_t i = 0; i < config.per_class[static_cast<std::size_t>(label)]; ++i) {
      ds.add(synth_frame(config, label, index++));
    }
  }
  return ds;
}

}  // namespace sitpose
