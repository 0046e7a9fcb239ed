#pragma once

// Session monitor: a 1 Hz posture label stream drives tumbling-window
// bad-posture alerts, cumulative sedentary alerts and the session report.

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sitpose/ensemble.hpp"
#include "sitpose/features.hpp"
#include "sitpose/skeleton.hpp"

namespace sitpose {

struct MonitorConfig {
  int window_s = 60;
  double abnormal_fraction = 0.75;  // alert when strictly exceeded
  int sedentary_threshold_s = 3600;
  int standing_reset_s = 120;
  int realert_interval_s = 1800;

  void validate() const;
};

enum class AlertKind : std::uint8_t { BadPosture, Sedentary };
std::string_view alert_kind_name(AlertKind kind);

struct Alert {
  AlertKind kind = AlertKind::BadPosture;
  std::uint64_t tick = 0;
  PostureLabel posture = PostureLabel::SittingStraight;  // BadPosture: modal incorrect class
  std::uint32_t incorrect_in_window = 0;                 // BadPosture
  std::uint32_t window_length = 0;                       // BadPosture
  std::uint64_t sitting_s = 0;                           // Sedentary: bout length so far

  std::string detail() const;
  /// `ALERT <tick> <kind> <detail>`
  std::string line() const;
  friend bool operator==(const Alert&, const Alert&) = default;
};

inline constexpr std::size_t kNumIncorrect = 5;
/// Index of an incorrect posture in kIncorrectPostures, or -1.
int incorrect_index(PostureLabel label);

struct SessionState {
  std::uint64_t tick_count = 0;
  std::vector<PostureLabel> window;
  std::uint64_t cumulative_sitting_s = 0;
  std::uint64_t standing_run_s = 0;
  std::vector<std::uint64_t> bouts;
  std::array<std::uint64_t, kNumIncorrect> incorrect_counts{};
  std::uint64_t wrong_frames = 0;
  std::uint64_t bad_posture_windows = 0;
  std::uint64_t sedentary_alerts = 0;
  std::uint64_t total_sitting_s = 0;
  std::uint64_t total_standing_s = 0;
  std::vector<Alert> alerts;
};

/// Advances the session by one second. Returns the alerts raised at this
/// tick (also appended to state.alerts).
std::vector<Alert> tick(SessionState& state, PostureLabel label, const MonitorConfig& config);

struct LatencyStats {
  std::uint64_t frames = 0;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
  friend bool operator==(const LatencyStats&, const LatencyStats&) = default;
};
/// Nearest-rank p95.
LatencyStats summarize_latency(std::vector<double> samples_ms);

struct SessionReport {
  std::uint64_t session_s = 0;
  std::uint64_t wrong_frames = 0;
  std::array<std::uint64_t, kNumIncorrect> incorrect_counts{};
  std::uint64_t bad_posture_windows = 0;
  std::uint64_t sedentary_alerts = 0;
  std::uint64_t total_sitting_s = 0;
  std::uint64_t total_standing_s = 0;
  std::uint64_t bout_count = 0;  // closed bouts plus a non-empty open bout
  double average_bout_s = 0.0;
  std::uint64_t max_bout_s = 0;
  LatencyStats latency;
  std::uint64_t skipped_records = 0;
  friend bool operator==(const SessionReport&, const SessionReport&) = default;
};

SessionReport make_report(const SessionState& state, const LatencyStats& latency = {},
                          std::uint64_t skipped_records = 0);

/// key = value text in [posture], [sedentary] and [latency] sections.
std::string render_report(const SessionReport& report);
/// `class,frequency` rows for the five incorrect postures in code order.
std::string render_report_csv(const SessionReport& report);
/// Inverse of render_report. Throws ParseError on malformed text.
SessionReport parse_report(std::string_view text);

/// Yields skeleton frames until the input ends. Malformed records are
/// skipped and counted.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::optional<SkeletonFrame> next() = 0;
  std::uint64_t skipped() const { return skipped_; }

 protected:
  std::uint64_t skipped_ = 0;
};

enum class RecordFormat : std::uint8_t {
  Stream,   // timestamp_ms,27 coordinates
  Dataset,  // canonical dataset CSV, label and subject ignored
};

class StreamFrameSource final : public FrameSource {
 public:
  StreamFrameSource(std::istream& in, RecordFormat format);
  std::optional<SkeletonFrame> next() override;

 private:
  std::istream& in_;
  RecordFormat format_;
  std::size_t line_ = 0;
};

class VectorFrameSource final : public FrameSource {
 public:
  explicit VectorFrameSource(std::vector<SkeletonFrame> frames) : frames_(std::move(frames)) {}
  std::optional<SkeletonFrame> next() override;

 private:
  std::vector<SkeletonFrame> frames_;
  std::size_t pos_ = 0;
};

/// Listens on the port, accepts one client and reads stream-format lines.
/// Ends when the client disconnects or `stop` becomes true (a signal
/// interrupting a blocking call is noticed immediately).
class TcpFrameSource final : public FrameSource {
 public:
  TcpFrameSource(std::uint16_t port, const std::atomic<bool>* stop = nullptr);
  ~TcpFrameSource() override;
  TcpFrameSource(const TcpFrameSource&) = delete;
  TcpFrameSource& operator=(const TcpFrameSource&) = delete;
  std::uint16_t port() const { return port_; }
  std::optional<SkeletonFrame> next() override;

 private:
  bool fill();
  int listen_fd_ = -1;
  int client_fd_ = -1;
  std::uint16_t port_ = 0;
  const std::atomic<bool>* stop_;
  std::string buffer_;
  std::size_t line_ = 0;
  bool eof_ = false;
};

using FrameClassifier = std::function<PostureLabel(const SkeletonFrame&)>;

struct StreamOptions {
  std::function<void(const Alert&)> on_alert;
  const std::atomic<bool>* stop = nullptr;
};

/// Reduces frames to 1 Hz labels by per-second majority (timestamps decide
/// the second; ties go to the lowest code; empty seconds repeat the previous
/// label, Standing before the first) and drives tick. Latency covers each
/// classifier call.
SessionReport run_stream(FrameSource& source, const FrameClassifier& classify,
                         const MonitorConfig& config, const StreamOptions& options = {},
                         SessionState* final_state = nullptr);
SessionReport run_stream(FrameSource& source, const TrainedEnsemble& model,
                         const FeatureConfig& features, const MonitorConfig& config,
                         const StreamOptions& options = {}, SessionState* final_state = nullptr);

}  // namespace sitpose
