#include <doctest.h>

#include <cmath>
#include <random>

#include "sitpose/error.hpp"
#include "sitpose/features.hpp"
#include "sitpose/synth.hpp"

using namespace sitpose;

namespace {

long double oracle_degrees(const Vec3& a, const Vec3& b) {
  const long double ax = a.x, ay = a.y, az = a.z, bx = b.x, by = b.y, bz = b.z;
  const long double dot = ax * bx + ay * by + az * bz;
  const long double na = std::sqrt(ax * ax + ay * ay + az * az);
  const long double nb = std::sqrt(bx * bx + by * by + bz * bz);
  long double c = dot / (na * nb);
  if (c > 1) c = 1;
  if (c < -1) c = -1;
  return std::acos(c) * 180.0L / 3.141592653589793238462643383279502884L;
}

SkeletonFrame upright() {
  SkeletonFrame f;
  f[JointId::Pelvis] = {0, 0, 800};
  f[JointId::SpineNavel] = {0, -100, 800};
  f[JointId::SpineChest] = {0, -300, 800};
  f[JointId::Neck] = {0, -500, 800};
  f[JointId::Head] = {0, -650, 800};
  f[JointId::LeftClavicle] = {-40, -480, 800};
  f[JointId::LeftShoulder] = {-170, -450, 800};
  f[JointId::RightClavicle] = {40, -480, 800};
  f[JointId::RightShoulder] = {170, -450, 800};
  return f;
}

SkeletonFrame transformed(const SkeletonFrame& f, auto&& map) {
  SkeletonFrame out = f;
  for (auto& p : out.positions) p = map(p);
  return out;
}

}  // namespace

TEST_CASE("triple table") {
  const auto& t = selected_triples();
  CHECK(t.size() == 9);
  CHECK(std::get<AuxPoint>(t[0].first.from) == AuxPoint::J);
  CHECK(std::get<JointId>(t[0].second.to) == JointId::SpineNavel);
  CHECK(std::get<AuxPoint>(t[5].first.from) == AuxPoint::N);
  CHECK(std::get<JointId>(t[5].first.to) == JointId::RightShoulder);
  CHECK(std::get<JointId>(t[8].second.to) == JointId::SpineChest);
  CHECK(aux_anchor(AuxPoint::K) == JointId::Neck);
  CHECK(aux_anchor(AuxPoint::M) == JointId::LeftClavicle);
}

TEST_CASE("auxiliary points") {
  SkeletonFrame f = upright();
  f[JointId::Neck] = {10, -500, 820};
  const Vec3 j = auxiliary_point(f, JointId::Pelvis);
  CHECK(j == Vec3{100, 0, 800});
  CHECK(auxiliary_point(f, JointId::Neck) == Vec3{110, -500, 820});
  CHECK_THROWS_AS(auxiliary_point(f, JointId::Head), InvalidArgument);
  CHECK_THROWS_AS(auxiliary_point(f, JointId::Pelvis, 0.0), InvalidArgument);
}

TEST_CASE("segment vectors") {
  CHECK(segment_vector({0, 0, 0}, {1, 2, 3}) == Vec3{1, 2, 3});
  CHECK(segment_vector({1, 1, 1}, {1, 1, 1}) == Vec3{0, 0, 0});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 100; ++i) {
    const Vec3 a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
    const Vec3 v = segment_vector(a, b);
    CHECK(v.x == b.x - a.x);
    CHECK(v.y == b.y - a.y);
    CHECK(v.z == b.z - a.z);
  }
}

TEST_CASE("angle between") {
  CHECK(angle_between({1, 0, 0}, {1, 0, 0}) == 0.0);
  CHECK(angle_between({1, 0, 0}, {0, 1, 0}) == doctest::Approx(90.0).epsilon(1e-15));
  CHECK(angle_between({1, 0, 0}, {-1, 0, 0}) == doctest::Approx(180.0).epsilon(1e-15));
  CHECK_THROWS_WITH_AS(angle_between({0, 0, 0}, {1, 0, 0}), "degenerate segment", DegenerateError);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0), c(0.01, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
    const double th = angle_between(a, b);
    CHECK(th >= 0.0);
    CHECK(th <= 180.0);
    CHECK(std::abs(th - static_cast<double>(oracle_degrees(a, b))) < 1e-9);
    CHECK(angle_between(b, a) == doctest::Approx(th).epsilon(1e-14));
    const double k = c(rng);
    CHECK(std::abs(angle_between(a, k * a)) < 1e-9);
    CHECK(std::abs(angle_between(a, -k * a) - 180.0) < 1e-9);
  }
}

TEST_CASE("upright colinear trunk") {
  const FeatureVector fv = extract_features(upright());
  CHECK(fv.angles_deg[0] == doctest::Approx(90.0));
  CHECK(fv.angles_deg[3] == doctest::Approx(0.0));
  CHECK(fv.angles_deg[4] == doctest::Approx(0.0));
  CHECK(fv.head_depth_mm == 800.0);
  CHECK(fv.values().size() == 10);

  FeatureConfig xyz;
  xyz.include_head_xyz = true;
  const FeatureVector fx = extract_features(upright(), xyz);
  CHECK(fx.values().size() == 12);
  CHECK(fx.values()[10] == 0.0);
  CHECK(fx.values()[11] == -650.0);
}

TEST_CASE("coincident joints name the triple") {
  SkeletonFrame f = upright();
  f[JointId::SpineChest] = f[JointId::SpineNavel];
  CHECK_THROWS_WITH_AS(extract_features(f), "degenerate segment in angle triple 4", DegenerateError);
}

TEST_CASE("offset, translation and scale invariance") {
  const Dataset d = generate(SynthConfig::uniform(20, 4));
  for (const auto& row : d.rows()) {
    const auto base = extract_features(row.frame).values();
    for (double delta : {1.0, 1e4}) {
      FeatureConfig c;
      c.aux_offset_mm = delta;
      const auto v = extract_features(row.frame, c).values();
      // Triple 6 pairs N (anchored at H) with the vertex I, so only it sees the offset.
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i == 5) {
          CHECK(std::abs(v[i] - base[i]) > 1e-6);
        } else {
          CHECK(std::abs(v[i] - base[i]) < 1e-9);
        }
      }
    }
    const auto shifted = extract_features(transformed(row.frame, [](const Vec3& p) { return p + Vec3{35, -20, 400}; }));
    for (std::size_t i = 0; i < kNumAngles; ++i) CHECK(std::abs(shifted.angles_deg[i] - base[i]) < 1e-9);
    CHECK(shifted.head_depth_mm == doctest::Approx(base[9] + 400.0));

    FeatureConfig scaled;
    scaled.aux_offset_mm = 100.0 * 3.5;
    const auto big = extract_features(transformed(row.frame, [](const Vec3& p) { return 3.5 * p; }), scaled);
    for (std::size_t i = 0; i < kNumAngles; ++i) CHECK(std::abs(big.angles_deg[i] - base[i]) < 1e-9);
  }
}

TEST_CASE("rotations split real-joint and auxiliary angles") {
  const SkeletonFrame f = generate(SynthConfig::uniform(1, 8))[1].frame;  // hunching
  const auto base = extract_features(f);
  const double a = 0.3, c = std::cos(a), s = std::sin(a);
  const Vec3 pivot = f[JointId::Pelvis];

  const auto rx = extract_features(transformed(f, [&](const Vec3& p) {
    const Vec3 d = p - pivot;
    return pivot + Vec3{d.x, c * d.y - s * d.z, s * d.y + c * d.z};
  }));
  for (std::size_t i = 0; i < kNumAngles; ++i) CHECK(std::abs(rx.angles_deg[i] - base.angles_deg[i]) < 1e-9);

  const auto ry = extract_features(transformed(f, [&](const Vec3& p) {
    const Vec3 d = p - pivot;
    return pivot + Vec3{c * d.x + s * d.z, d.y, -s * d.x + c * d.z};
  }));
  for (std::size_t i : {3u, 4u, 7u, 8u}) CHECK(std::abs(ry.angles_deg[i] - base.angles_deg[i]) < 1e-9);
  for (std::size_t i : {0u, 1u, 2u, 5u, 6u}) CHECK(std::abs(ry.angles_deg[i] - base.angles_deg[i]) > 1e-3);
}

TEST_CASE("generated frames give finite bounded features") {
  const Dataset d = generate(SynthConfig::uniform(1430, 99));  // 10,010 frames
  const auto table = extract_dataset_features(d);
  REQUIRE(table.x.rows() == d.size());
  CHECK(table.x.cols() == 10);
  for (std::size_t r = 0; r < table.x.rows(); ++r) {
    for (std::size_t i = 0; i < kNumAngles; ++i) {
      const double v = table.x(r, i);
      CHECK_MESSAGE((std::isfinite(v) && v >= 0.0 && v <= 180.0), "row " << r);
    }
    CHECK(table.x(r, 9) > 0.0);
    CHECK(table.y[r] == label_code(d[r].label));
  }
}
