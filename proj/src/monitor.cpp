#include "sitpose/monitor.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <sstream>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "sitpose/error.hpp"
#include "text_util.hpp"

namespace sitpose {

void MonitorConfig::validate() const {
  if (window_s <= 0 || sedentary_threshold_s <= 0 || standing_reset_s <= 0 || realert_interval_s <= 0) {
    throw InvalidArgument("monitor durations must be positive");
  }
  if (!(abnormal_fraction > 0.0 && abnormal_fraction < 1.0)) {
    throw InvalidArgument("abnormal fraction must lie in (0, 1)");
  }
}

std::string_view alert_kind_name(AlertKind kind) {
  return kind == AlertKind::BadPosture ? "BadPosture" : "Sedentary";
}

std::string Alert::detail() const {
  if (kind == AlertKind::BadPosture) {
    return "posture=" + std::string(label_name(posture)) + " incorrect=" +
           std::to_string(incorrect_in_window) + "/" + std::to_string(window_length);
  }
  return "sitting_s=" + std::to_string(sitting_s);
}

std::string Alert::line() const {
  return "ALERT " + std::to_string(tick) + " " + std::string(alert_kind_name(kind)) + " " + detail();
}

int incorrect_index(PostureLabel label) {
  for (std::size_t i = 0; i < kIncorrectPostures.size(); ++i) {
    if (kIncorrectPostures[i] == label) return static_cast<int>(i);
  }
  return -1;
}

std::vector<Alert> tick(SessionState& state, PostureLabel label, const MonitorConfig& config) {
  std::vector<Alert> raised;
  const std::uint64_t now = ++state.tick_count;

  if (is_seated(label)) {
    ++state.cumulative_sitting_s;
    ++state.total_sitting_s;
    state.standing_run_s = 0;
    const auto threshold = static_cast<std::uint64_t>(config.sedentary_threshold_s);
    const auto every = static_cast<std::uint64_t>(config.realert_interval_s);
    const auto sitting = state.cumulative_sitting_s;
    if (sitting == threshold || (sitting > threshold && (sitting - threshold) % every == 0)) {
      Alert a;
      a.kind = AlertKind::Sedentary;
      a.tick = now;
      a.sitting_s = sitting;
      raised.push_back(a);
      ++state.sedentary_alerts;
    }
  } else {
    ++state.standing_run_s;
    ++state.total_standing_s;
    if (state.standing_run_s == static_cast<std::uint64_t>(config.standing_reset_s)) {
      if (state.cumulative_sitting_s > 0) state.bouts.push_back(state.cumulative_sitting_s);
      state.cumulative_sitting_s = 0;
    }
  }

  if (const int idx = incorrect_index(label); idx >= 0) {
    ++state.incorrect_counts[static_cast<std::size_t>(idx)];
    ++state.wrong_frames;
  }

  state.window.push_back(label);
  if (state.window.size() >= static_cast<std::size_t>(config.window_s)) {
    std::array<std::uint32_t, kNumIncorrect> counts{};
    std::uint32_t incorrect = 0;
    for (PostureLabel l : state.window) {
      if (const int idx = incorrect_index(l); idx >= 0) {
        ++counts[static_cast<std::size_t>(idx)];
        ++incorrect;
      }
    }
    const double fraction = static_cast<double>(incorrect) / static_cast<double>(state.window.size());
    if (fraction > config.abnormal_fraction) {
      // kIncorrectPostures is in code order, so the first maximum is the lowest code.
      const auto modal = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      Alert a;
      a.kind = AlertKind::BadPosture;
      a.tick = now;
      a.posture = kIncorrectPostures[modal];
      a.incorrect_in_window = incorrect;
      a.window_length = static_cast<std::uint32_t>(state.window.size());
      raised.insert(raised.begin(), a);
      ++state.bad_posture_windows;
    }
    state.window.clear();
  }

  state.alerts.insert(state.alerts.end(), raised.begin(), raised.end());
  return raised;
}

LatencyStats summarize_latency(std::vector<double> samples_ms) {
  LatencyStats s;
  if (samples_ms.empty()) return s;
  s.frames = samples_ms.size();
  double sum = 0.0;
  for (double v : samples_ms) sum += v;
  s.mean_ms = sum / static_cast<double>(samples_ms.size());
  std::sort(samples_ms.begin(), samples_ms.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples_ms.size())));
  s.p95_ms = samples_ms[std::max<std::size_t>(rank, 1) - 1];
  s.max_ms = samples_ms.back();
  return s;
}

SessionReport make_report(const SessionState& state, const LatencyStats& latency,
                          std::uint64_t skipped_records) {
  SessionReport r;
  r.session_s = state.tick_count;
  r.wrong_frames = state.wrong_frames;
  r.incorrect_counts = state.incorrect_counts;
  r.bad_posture_windows = state.bad_posture_windows;
  r.sedentary_alerts = state.sedentary_alerts;
  r.total_sitting_s = state.total_sitting_s;
  r.total_standing_s = state.total_standing_s;
  r.bout_count = state.bouts.size() + (state.cumulative_sitting_s > 0 ? 1 : 0);
  std::uint64_t longest = state.cumulative_sitting_s;
  for (auto b : state.bouts) longest = std::max(longest, b);
  r.max_bout_s = longest;
  r.average_bout_s = r.bout_count == 0 ? 0.0
                                       : static_cast<double>(r.total_sitting_s) /
                                             static_cast<double>(r.bout_count);
  r.latency = latency;
  r.skipped_records = skipped_records;
  return r;
}

std::string render_report(const SessionReport& r) {
  std::ostringstream out;
  out << "[posture]\n";
  out << "session_s = " << r.session_s << '\n';
  out << "wrong_frames = " << r.wrong_frames << '\n';
  out << "bad_posture_windows = " << r.bad_posture_windows << '\n';
  for (std::size_t i = 0; i < kNumIncorrect; ++i) {
    out << label_name(kIncorrectPostures[i]) << " = " << r.incorrect_counts[i] << '\n';
  }
  out << "\n[sedentary]\n";
  out << "total_sitting_s = " << r.total_sitting_s << '\n';
  out << "total_standing_s = " << r.total_standing_s << '\n';
  out << "bout_count = " << r.bout_count << '\n';
  out << "average_bout_s = " << detail::shortest(r.average_bout_s) << '\n';
  out << "max_bout_s = " << r.max_bout_s << '\n';
  out << "sedentary_alerts = " << r.sedentary_alerts << '\n';
  out << "\n[latency]\n";
  out << "frames = " << r.latency.frames << '\n';
  out << "skipped_records = " << r.skipped_records << '\n';
  out << "mean_ms = " << detail::shortest(r.latency.mean_ms) << '\n';
  out << "p95_ms = " << detail::shortest(r.latency.p95_ms) << '\n';
  out << "max_ms = " << detail::shortest(r.latency.max_ms) << '\n';
  return out.str();
}

std::string render_report_csv(const SessionReport& r) {
  std::string out = "class,frequency\n";
  for (std::size_t i = 0; i < kNumIncorrect; ++i) {
    out += label_name(kIncorrectPostures[i]);
    out += ',';
    out += std::to_string(r.incorrect_counts[i]);
    out += '\n';
  }
  return out;
}

SessionReport parse_report(std::string_view text) {
  std::map<std::string, std::string, std::less<>> values;
  std::size_t line_no = 0;
  for (std::string_view raw : detail::split(text, '\n')) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '[' || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
    values[std::string(detail::trim(line.substr(0, eq)))] = std::string(detail::trim(line.substr(eq + 1)));
  }
  auto raw = [&](std::string_view key) -> const std::string& {
    const auto it = values.find(key);
    if (it == values.end()) throw ParseError("report is missing " + std::string(key));
    return it->second;
  };
  auto u64 = [&](std::string_view key) {
    const auto v = detail::parse_int<std::uint64_t>(raw(key));
    if (!v) throw ParseError("bad integer for " + std::string(key));
    return *v;
  };
  auto real = [&](std::string_view key) {
    const auto v = detail::parse_double(raw(key));
    if (!v) throw ParseError("bad number for " + std::string(key));
    return *v;
  };
  SessionReport r;
  r.session_s = u64("session_s");
  r.wrong_frames = u64("wrong_frames");
  r.bad_posture_windows = u64("bad_posture_windows");
  for (std::size_t i = 0; i < kNumIncorrect; ++i) r.incorrect_counts[i] = u64(label_name(kIncorrectPostures[i]));
  r.total_sitting_s = u64("total_sitting_s");
  r.total_standing_s = u64("total_standing_s");
  r.bout_count = u64("bout_count");
  r.average_bout_s = real("average_bout_s");
  r.max_bout_s = u64("max_bout_s");
  r.sedentary_alerts = u64("sedentary_alerts");
  r.latency.frames = u64("frames");
  r.skipped_records = u64("skipped_records");
  r.latency.mean_ms = real("mean_ms");
  r.latency.p95_ms = real("p95_ms");
  r.latency.max_ms = real("max_ms");
  return r;
}

StreamFrameSource::StreamFrameSource(std::istream& in, RecordFormat format) : in_(in), format_(format) {}

std::optional<SkeletonFrame> StreamFrameSource::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    std::string_view record = body;
    if (format_ == RecordFormat::Dataset) {
      if (line_ == 1 && body == dataset_header()) continue;
      const auto first = record.find(',');
      const auto second = first == std::string_view::npos ? first : record.find(',', first + 1);
      if (second == std::string_view::npos) {
        ++skipped_;
        continue;
      }
      record = record.substr(second + 1);
    }
    try {
      return parse_stream_line(record, line_);
    } catch (const ParseError&) {
      ++skipped_;
    }
  }
  return std::nullopt;
}

std::optional<SkeletonFrame> VectorFrameSource::next() {
  if (pos_ >= frames_.size()) return std::nullopt;
  return frames_[pos_++];
}

TcpFrameSource::TcpFrameSource(std::uint16_t port, const std::atomic<bool>* stop) : stop_(stop) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(listen_fd_, 1) < 0) {
    const std::string msg = std::strerror(errno);
    ::close(listen_fd_);
    throw Error("cannot listen on port " + std::to_string(port) + ": " + msg);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpFrameSource::~TcpFrameSource() {
  if (client_fd_ >= 0) ::close(client_fd_);
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

bool TcpFrameSource::fill() {
  auto stopped = [&] { return stop_ != nullptr && stop_->load(); };
  while (client_fd_ < 0) {
    if (stopped()) return false;
    client_fd_ = ::accept(listen_fd_, nullptr, nullptr);
    if (client_fd_ < 0 && errno != EINTR) throw Error(std::string("accept: ") + std::strerror(errno));
  }
  char buf[4096];
  while (true) {
    if (stopped()) return false;
    const ssize_t n = ::recv(client_fd_, buf, sizeof(buf), 0);
    if (n > 0) {
      buffer_.append(buf, static_cast<std::size_t>(n));
      return true;
    }
    if (n == 0) return false;
    if (errno != EINTR) throw Error(std::string("recv: ") + std::strerror(errno));
  }
}

std::optional<SkeletonFrame> TcpFrameSource::next() {
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl == std::string::npos && !eof_) {
      if (!fill()) eof_ = true;
      continue;
    }
    if (nl == std::string::npos && buffer_.empty()) return std::nullopt;
    std::string line = nl == std::string::npos ? buffer_ : buffer_.substr(0, nl);
    buffer_.erase(0, nl == std::string::npos ? buffer_.size() : nl + 1);
    ++line_;
    if (detail::trim(line).empty()) continue;
    try {
      return parse_stream_line(line, line_);
    } catch (const ParseError&) {
      ++skipped_;
    }
  }
}

namespace {

PostureLabel majority(const std::array<std::uint32_t, kNumPostures>& votes) {
  return label_from_code(static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()));
}

}  // namespace

SessionReport run_stream(FrameSource& source, const FrameClassifier& classify,
                         const MonitorConfig& config, const StreamOptions& options,
                         SessionState* final_state) {
  config.validate();
  SessionState state;
  std::vector<double> latency;
  std::array<std::uint32_t, kNumPostures> votes{};
  bool have_second = false;
  std::int64_t second = 0;
  PostureLabel previous = PostureLabel::Standing;

  auto emit = [&](PostureLabel label) {
    for (const auto& a : tick(state, label, config)) {
      if (options.on_alert) options.on_alert(a);
    }
  };
  auto close_second = [&] {
    previous = majority(votes);
    emit(previous);
    votes.fill(0);
  };

  while (!(options.stop != nullptr && options.stop->load())) {
    auto frame = source.next();
    if (!frame) break;
    const std::int64_t s = frame->timestamp_ms / 1000;
    if (!have_second) {
      have_second = true;
      second = s;
    } else if (s > second) {
      close_second();
      for (std::int64_t gap = second + 1; gap < s; ++gap) emit(previous);
      second = s;
    }
    const auto start = std::chrono::steady_clock::now();
    PostureLabel label;
    try {
      label = classify(*frame);
    } catch (const Error& e) {
      throw Error("classifying frame at " + std::to_string(frame->timestamp_ms) + " ms: " + e.what());
    }
    const auto stop = std::chrono::steady_clock::now();
    latency.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    ++votes[static_cast<std::size_t>(label)];
  }
  if (have_second) close_second();

  auto report = make_report(state, summarize_latency(std::move(latency)), source.skipped());
  if (final_state != nullptr) *final_state = std::move(state);
  return report;
}

SessionReport run_stream(FrameSource& source, const TrainedEnsemble& model,
                         const FeatureConfig& features, const MonitorConfig& config,
                         const StreamOptions& options, SessionState* final_state) {
  if (features.dimension() != model.feature_dim()) {
    throw InvalidArgument("feature configuration does not match the model");
  }
  const FrameClassifier classify = [&](const SkeletonFrame& frame) {
    const auto x = extract_features(frame, features).values();
    return label_from_code(model.predict(x));
  };
  return run_stream(source, classify, config, options, final_state);
}

}  // namespace sitpose
