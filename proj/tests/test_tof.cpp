#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sitpose/error.hpp"
#include "sitpose/tof.hpp"

using namespace sitpose;
using namespace sitpose::tof;

namespace {

constexpr long double kPiL = 3.141592653589793238462643383279502884L;

// Closed forms evaluated in extended precision.
struct Ref {
  long double r0, r1, r2, r3;
};
Ref closed_form(long double a, long double b, long double dphi) {
  return {a + b - a * std::sin(dphi), a + b + a * std::cos(dphi), a + b + a * std::sin(dphi),
          a + b - a * std::cos(dphi)};
}

TofConfig at(double f) {
  TofConfig c;
  c.modulation_frequency_hz = f;
  return c;
}

}  // namespace

TEST_CASE("emitted signal") {
  TofConfig one = at(1.0);
  CHECK(emitted_signal(one, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(emitted_signal(one, 0.25) == doctest::Approx(2.0).epsilon(1e-15));

  TofConfig c = at(10e6);
  c.emitted_amplitude = 0.7;
  const long double ref = 0.7L * (1.0L + std::sin(2.0L * kPiL * 10e6L * 1.3e-8L));
  CHECK(std::abs(emitted_signal(c, 1.3e-8) - static_cast<double>(ref)) < 1e-12);
}

TEST_CASE("four-phase samples match the closed forms") {
  const TofConfig c = at(10e6);
  auto s = sample_received(1.0, 0.0, 0.0, c);
  CHECK(s.r0 == doctest::Approx(1.0));
  CHECK(s.r1 == doctest::Approx(2.0));
  CHECK(s.r2 == doctest::Approx(1.0));
  CHECK(std::abs(s.r3) < 1e-12);

  s = sample_received(1.0, 0.0, std::numbers::pi / 2, c);
  CHECK(std::abs(s.r0) < 1e-12);
  CHECK(s.r1 == doctest::Approx(1.0));
  CHECK(s.r2 == doctest::Approx(2.0));
  CHECK(s.r3 == doctest::Approx(1.0));

  s = sample_received(0.7, 0.2, 1.234, c);
  const Ref r = closed_form(0.7L, 0.2L, 1.234L);
  CHECK(std::abs(s.r0 - static_cast<double>(r.r0)) < 1e-12);
  CHECK(std::abs(s.r1 - static_cast<double>(r.r1)) < 1e-12);
  CHECK(std::abs(s.r2 - static_cast<double>(r.r2)) < 1e-12);
  CHECK(std::abs(s.r3 - static_cast<double>(r.r3)) < 1e-12);

  CHECK_THROWS_AS(sample_received(0.0, 0.0, 1.0, c), InvalidArgument);
  CHECK_THROWS_AS(sample_received(-1.0, 0.0, 1.0, c), InvalidArgument);
}

TEST_CASE("phase retrieval") {
  CHECK(phase_from_samples({1, 2, 1, 0}) == 0.0);
  CHECK(phase_from_samples({0, 1, 2, 1}) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
  const TofConfig c = at(10e6);
  CHECK(std::abs(phase_from_samples(sample_received(0.7, 0.2, 1.234, c)) - 1.234) < 1e-9);
  CHECK_THROWS_WITH_AS(phase_from_samples({1, 1, 1, 1}), "unrecoverable phase", DegenerateError);

  // Negative arctangent branch lands in [pi, 2pi).
  const double p = phase_from_samples(sample_received(1.0, 0.0, 5.0, c));
  CHECK(p == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("phase roundtrip, offset and amplitude invariance") {
  const TofConfig c = at(20e6);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> amp(1e-3, 2.0), off(0.0, 1.0), ph(0.0, 2 * std::numbers::pi);
  for (int i = 0; i < 2000; ++i) {
    const double a = amp(rng), b = off(rng), d = ph(rng);
    const double p = phase_from_samples(sample_received(a, b, d, c));
    CHECK(p >= 0.0);
    CHECK(p < 2 * std::numbers::pi);
    double err = std::abs(p - d);
    err = std::min(err, 2 * std::numbers::pi - err);  // wrap at 0 / 2pi
    CHECK(err < 1e-9);
    CHECK(std::abs(phase_from_samples(sample_received(a, b + 3.0, d, c)) - p) < 1e-9);
    CHECK(std::abs(phase_from_samples(sample_received(a * 7.5, b, d, c)) - p) < 1e-9);
  }
}

TEST_CASE("depth from phase") {
  const TofConfig c = at(10e6);
  CHECK(depth_from_phase(0.0, c) == 0.0);
  CHECK(depth_from_phase(std::numbers::pi, c) == doctest::Approx(7.49481145).epsilon(1e-9));
  const double below = std::nextafter(2 * std::numbers::pi, 0.0);
  const double d = depth_from_phase(below, c);
  CHECK(d < ambiguity_range(c));
  CHECK(d == doctest::Approx(14.9896229).epsilon(1e-9));
  CHECK(ambiguity_range(c) == doctest::Approx(kSpeedOfLight / 2e7).epsilon(1e-15));
  CHECK_THROWS_AS(depth_from_phase(-0.1, c), InvalidArgument);
  CHECK_THROWS_AS(depth_from_phase(std::nan(""), c), InvalidArgument);

  // Monotone in phase, decreasing in frequency.
  double prev = -1.0;
  for (int i = 0; i < 100; ++i) {
    const double v = depth_from_phase(0.06 * i, c);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(depth_from_phase(1.0, at(5e6)) > depth_from_phase(1.0, at(10e6)));
}

TEST_CASE("config validation and noise") {
  CHECK_THROWS_AS(at(0.0).validate(), InvalidArgument);
  TofConfig c = at(10e6);
  c.emitted_amplitude = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);

  const TofConfig ok = at(10e6);
  const auto a = sample_received_noisy(1.0, 0.1, 2.0, ok, 0.01, 9);
  const auto b = sample_received_noisy(1.0, 0.1, 2.0, ok, 0.01, 9);
  CHECK(a.r0 == b.r0);
  CHECK(a.r3 == b.r3);
  const auto clean = sample_received_noisy(1.0, 0.1, 2.0, ok, 0.0, 9);
  CHECK(clean.r1 == sample_received(1.0, 0.1, 2.0, ok).r1);
  CHECK(std::abs(phase_from_samples(a) - 2.0) < 0.1);
}
