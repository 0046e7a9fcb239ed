#pragma once

// Joint set, posture labels, camera-frame skeleton frames and the canonical
// dataset CSV format.
//
// Camera frame: origin at the depth camera focus, +X right, +Y down,
// +Z forward. Coordinates are millimeters.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sitpose {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// The nine tracked joints in canonical order. Letters are the labels used
/// when naming angle triples.
enum class JointId : std::uint8_t {
  Pelvis = 0,         // A
  SpineNavel = 1,     // B
  SpineChest = 2,     // C
  Neck = 3,           // D
  Head = 4,           // E
  LeftShoulder = 5,   // F
  LeftClavicle = 6,   // G
  RightClavicle = 7,  // H
  RightShoulder = 8,  // I
};

inline constexpr std::size_t kNumJoints = 9;
inline constexpr std::array<JointId, kNumJoints> kAllJoints = {
    JointId::Pelvis,       JointId::SpineNavel,   JointId::SpineChest,
    JointId::Neck,         JointId::Head,         JointId::LeftShoulder,
    JointId::LeftClavicle, JointId::RightClavicle, JointId::RightShoulder};

/// Lower-case column stem, e.g. "spinenavel".
std::string_view joint_name(JointId joint);
/// Single letter A..I.
char joint_letter(JointId joint);

enum class PostureLabel : std::uint8_t {
  SittingStraight = 0,
  HunchingOver = 1,
  LeftSitting = 2,
  RightSitting = 3,
  LeaningForward = 4,
  Lying = 5,
  Standing = 6,
};

inline constexpr std::size_t kNumPostures = 7;
inline constexpr std::array<PostureLabel, kNumPostures> kAllPostures = {
    PostureLabel::SittingStraight, PostureLabel::HunchingOver,   PostureLabel::LeftSitting,
    PostureLabel::RightSitting,    PostureLabel::LeaningForward, PostureLabel::Lying,
    PostureLabel::Standing};
inline constexpr std::array<PostureLabel, 5> kIncorrectPostures = {
    PostureLabel::HunchingOver, PostureLabel::LeftSitting, PostureLabel::RightSitting,
    PostureLabel::LeaningForward, PostureLabel::Lying};

constexpr int label_code(PostureLabel label) { return static_cast<int>(label); }
PostureLabel label_from_code(int code);
std::string_view label_name(PostureLabel label);
std::optional<PostureLabel> parse_label(std::string_view name);

constexpr bool is_incorrect(PostureLabel label) {
  return label != PostureLabel::SittingStraight && label != PostureLabel::Standing;
}
constexpr bool is_seated(PostureLabel label) { return label != PostureLabel::Standing; }

struct SkeletonFrame {
  std::int64_t timestamp_ms = 0;
  std::array<Vec3, kNumJoints> positions{};

  const Vec3& operator[](JointId j) const { return positions[static_cast<std::size_t>(j)]; }
  Vec3& operator[](JointId j) { return positions[static_cast<std::size_t>(j)]; }

  /// Empty when valid, otherwise a description of the first violation
  /// (negative timestamp, non-finite coordinate, joint behind the camera).
  std::optional<std::string> validation_error() const;
  bool valid() const { return !validation_error().has_value(); }

  friend bool operator==(const SkeletonFrame&, const SkeletonFrame&) = default;
};

struct LabeledFrame {
  SkeletonFrame frame;
  PostureLabel label = PostureLabel::SittingStraight;
  int subject_id = 0;

  friend bool operator==(const LabeledFrame&, const LabeledFrame&) = default;
};

using ClassCounts = std::array<std::size_t, kNumPostures>;

/// Ordered labeled frames with per-class counts kept in sync.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<LabeledFrame> rows);

  void add(LabeledFrame row);
  void reserve(std::size_t n) { rows_.reserve(n); }

  const std::vector<LabeledFrame>& rows() const { return rows_; }
  const ClassCounts& class_counts() const { return counts_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const LabeledFrame& operator[](std::size_t i) const { return rows_[i]; }

  /// Rows at the given indices, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<LabeledFrame> rows_;
  ClassCounts counts_{};
};

/// Header line of the dataset CSV (no trailing newline).
std::string dataset_header();

Dataset read_dataset(std::istream& in);
Dataset load_dataset(const std::filesystem::path& path);
void write_dataset(const Dataset& dataset, std::ostream& out);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Parses one live-stream record `timestamp_ms,x,y,z,...` (27 coordinates in
/// joint order). Throws ParseError carrying `line_number`.
SkeletonFrame parse_stream_line(std::string_view line, std::size_t line_number = 0);
/// Inverse of parse_stream_line with 6 decimal digits.
std::string format_stream_line(const SkeletonFrame& frame);

}  // namespace sitpose
