#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sitpose/error.hpp"
#include "sitpose/monitor.hpp"
#include "sitpose/synth.hpp"

using namespace sitpose;

namespace {

using P = PostureLabel;

// First `bad` seconds hunching, rest upright, for one 60 s window.
std::vector<P> window_script(int bad) {
  std::vector<P> s(60, P::SittingStraight);
  for (int i = 0; i < bad; ++i) s[static_cast<std::size_t>(i)] = P::HunchingOver;
  return s;
}

SessionState play(const std::vector<P>& labels, const MonitorConfig& config = {}) {
  SessionState st;
  for (P l : labels) tick(st, l, config);
  return st;
}

std::vector<P> repeat(P label, std::size_t n) { return std::vector<P>(n, label); }

std::vector<P> concat(std::initializer_list<std::vector<P>> parts) {
  std::vector<P> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

SkeletonFrame frame_at(std::int64_t ms) {
  auto f = synth_frame(SynthConfig::uniform(1, 1), P::SittingStraight, 0).frame;
  f.timestamp_ms = ms;
  return f;
}

}  // namespace

TEST_CASE("46 of 60 incorrect raises exactly one alert at tick 60") {
  const auto st = play(window_script(46));
  REQUIRE(st.alerts.size() == 1);
  const auto& a = st.alerts[0];
  CHECK(a.kind == AlertKind::BadPosture);
  CHECK(a.tick == 60);
  CHECK(a.posture == P::HunchingOver);
  CHECK(a.incorrect_in_window == 46);
  CHECK(a.window_length == 60);
  CHECK(a.line() == "ALERT 60 BadPosture posture=HunchingOver incorrect=46/60");
  CHECK(st.bad_posture_windows == 1);
}

TEST_CASE("45 of 60 is exactly the fraction and raises nothing") {
  const auto st = play(window_script(45));
  CHECK(st.alerts.empty());
  CHECK(st.wrong_frames == 45);
}

TEST_CASE("windows tumble and the modal class breaks ties low") {
  std::vector<P> s;
  for (int i = 0; i < 25; ++i) s.push_back(P::Lying);
  for (int i = 0; i < 25; ++i) s.push_back(P::LeftSitting);
  for (int i = 0; i < 10; ++i) s.push_back(P::SittingStraight);
  const auto full = concat({s, s, repeat(P::Lying, 59)});
  const auto st = play(full);
  REQUIRE(st.alerts.size() == 2);
  CHECK(st.alerts[0].tick == 60);
  CHECK(st.alerts[1].tick == 120);
  CHECK(st.alerts[0].posture == P::LeftSitting);  // 25 vs 25, lower code
  CHECK(st.incorrect_counts[static_cast<std::size_t>(incorrect_index(P::Lying))] == 25 + 25 + 59);
}

TEST_CASE("sedentary alert exactly at the threshold, then at each re-alert interval") {
  auto st = play(repeat(P::SittingStraight, 3600));
  REQUIRE(st.alerts.size() == 1);
  CHECK(st.alerts[0].kind == AlertKind::Sedentary);
  CHECK(st.alerts[0].tick == 3600);
  CHECK(st.alerts[0].line() == "ALERT 3600 Sedentary sitting_s=3600");
  CHECK(play(repeat(P::SittingStraight, 3599)).alerts.empty());

  st = play(repeat(P::SittingStraight, 3600 + 1800));
  REQUIRE(st.sedentary_alerts == 2);
  CHECK(st.alerts[1].tick == 5400);
}

TEST_CASE("119 s of standing keeps the bout open, 120 s closes it") {
  MonitorConfig c;
  auto st = play(concat({repeat(P::SittingStraight, 100), repeat(P::Standing, 119)}), c);
  CHECK(st.bouts.empty());
  CHECK(st.cumulative_sitting_s == 100);

  st = play(concat({repeat(P::SittingStraight, 100), repeat(P::Standing, 120)}), c);
  REQUIRE(st.bouts.size() == 1);
  CHECK(st.bouts[0] == 100);
  CHECK(st.cumulative_sitting_s == 0);

  // Short breaks do not reset the sedentary clock.
  st = play(concat({repeat(P::SittingStraight, 3000), repeat(P::Standing, 119),
                    repeat(P::SittingStraight, 600)}),
            c);
  REQUIRE(st.sedentary_alerts == 1);
  CHECK(st.alerts[0].tick == 3600 + 119);
}

TEST_CASE("a 61-minute sitting replay") {
  const auto st = play(repeat(P::SittingStraight, 3660));
  const auto r = make_report(st);
  CHECK(r.session_s == 3660);
  CHECK(r.max_bout_s == 3660);
  CHECK(r.bout_count == 1);
  CHECK(r.average_bout_s == 3660.0);
  CHECK(r.sedentary_alerts == 1);
  CHECK(r.bad_posture_windows == 0);
  CHECK(r.wrong_frames == 0);
}

TEST_CASE("bout statistics count the open bout") {
  const auto st = play(concat({repeat(P::SittingStraight, 200), repeat(P::Standing, 150),
                               repeat(P::HunchingOver, 50), repeat(P::Standing, 10)}));
  const auto r = make_report(st);
  CHECK(r.bout_count == 2);
  CHECK(r.total_sitting_s == 250);
  CHECK(r.total_standing_s == 160);
  CHECK(r.average_bout_s == 125.0);
  CHECK(r.max_bout_s == 200);
}

TEST_CASE("empty stream gives an all-zero report") {
  VectorFrameSource src({});
  const auto r = run_stream(src, [](const SkeletonFrame&) { return P::Lying; }, {});
  CHECK(r == SessionReport{});
}

TEST_CASE("30 fps frames reduce to one label per second by majority") {
  std::vector<SkeletonFrame> frames;
  std::vector<P> labels;
  for (int i = 0; i < 30; ++i) {
    frames.push_back(frame_at(i * 33));
    labels.push_back(i < 20 ? P::Lying : P::SittingStraight);
  }
  // Second 1 missing entirely; second 2 has a single frame.
  frames.push_back(frame_at(2500));
  labels.push_back(P::HunchingOver);
  std::size_t k = 0;
  VectorFrameSource src(frames);
  SessionState st;
  const auto r = run_stream(src, [&](const SkeletonFrame&) { return labels[k++]; }, {}, {}, &st);
  CHECK(r.session_s == 3);
  CHECK(r.incorrect_counts[static_cast<std::size_t>(incorrect_index(P::Lying))] == 2);  // second 0 and the gap
  CHECK(r.incorrect_counts[static_cast<std::size_t>(incorrect_index(P::HunchingOver))] == 1);
  CHECK(r.latency.frames == 31);
}

TEST_CASE("reports render, parse back and are deterministic") {
  const auto script = concat({window_script(50), repeat(P::RightSitting, 30), repeat(P::Standing, 130),
                              repeat(P::SittingStraight, 3700)});
  const auto a = make_report(play(script), summarize_latency({1.0, 2.0, 3.5}), 4);
  const auto b = make_report(play(script), summarize_latency({1.0, 2.0, 3.5}), 4);
  const auto text = render_report(a);
  CHECK(text == render_report(b));
  CHECK(text.find("[posture]") != std::string::npos);
  CHECK(text.find("[sedentary]") != std::string::npos);
  CHECK(text.find("[latency]") != std::string::npos);
  CHECK(parse_report(text) == a);
  CHECK_THROWS_AS(parse_report("[posture]\nwrong_frames = x\n"), ParseError);

  const auto csv = render_report_csv(a);
  CHECK(csv.rfind("class,frequency\nHunchingOver,50\nLeftSitting,0\nRightSitting,30\n", 0) == 0);
}

TEST_CASE("latency summary uses nearest-rank p95") {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  const auto s = summarize_latency(v);
  CHECK(s.frames == 100);
  CHECK(s.mean_ms == doctest::Approx(50.5));
  CHECK(s.p95_ms == 95.0);
  CHECK(s.max_ms == 100.0);
  CHECK(summarize_latency({}) == LatencyStats{});
}

TEST_CASE("stream source skips malformed records") {
  std::ostringstream text;
  text << format_stream_line(frame_at(0)) << "\n";
  text << "garbage\n";
  text << format_stream_line(frame_at(1000)) << "\n";
  std::istringstream in(text.str());
  StreamFrameSource src(in, RecordFormat::Stream);
  int n = 0;
  while (src.next()) ++n;
  CHECK(n == 2);
  CHECK(src.skipped() == 1);
}

TEST_CASE("configuration is validated") {
  MonitorConfig c;
  c.abnormal_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.window_s = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("TCP source reads stream lines from one client") {
  TcpFrameSource src(0);
  REQUIRE(src.port() != 0);
  std::thread client([port = src.port()] {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
      std::string payload;
      for (int i = 0; i < 5; ++i) payload += format_stream_line(frame_at(i * 400)) + "\n";
      payload += "bad line\n";
      (void)::send(fd, payload.data(), payload.size(), 0);
    }
    ::close(fd);
  });
  int n = 0;
  while (auto f = src.next()) {
    CHECK(f->timestamp_ms == n * 400);
    ++n;
  }
  client.join();
  CHECK(n == 5);
  CHECK(src.skipped() == 1);
}
