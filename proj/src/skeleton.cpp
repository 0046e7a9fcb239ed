#include "sitpose/skeleton.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "sitpose/error.hpp"
#include "text_util.hpp"

namespace sitpose {

namespace {

constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "pelvis",    "spinenavel",   "spinechest",    "neck",         "head",
    "leftshoulder", "leftclavicle", "rightclavicle", "rightshoulder"};

constexpr std::array<std::string_view, kNumPostures> kLabelNames = {
    "SittingStraight", "HunchingOver", "LeftSitting", "RightSitting",
    "LeaningForward",  "Lying",        "Standing"};

constexpr std::size_t kCoordColumns = 3 * kNumJoints;
constexpr std::size_t kDatasetColumns = 3 + kCoordColumns;

std::array<Vec3, kNumJoints> parse_coordinates(std::span<const std::string_view> fields,
                                               std::size_t line) {
  std::array<Vec3, kNumJoints> pos{};
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    double xyz[3];
    for (std::size_t k = 0; k < 3; ++k) {
      const std::string_view field = fields[3 * j + k];
      const auto v = detail::parse_double(field);
      if (!v) {
        throw ParseError("non-numeric coordinate '" + std::string(field) + "' for " +
                             std::string(kJointNames[j]),
                         line);
      }
      if (!std::isfinite(*v)) {
        throw ParseError("non-finite coordinate for " + std::string(kJointNames[j]), line);
      }
      xyz[k] = *v;
    }
    pos[j] = {xyz[0], xyz[1], xyz[2]};
  }
  return pos;
}

void append_coordinates(std::string& out, const SkeletonFrame& frame) {
  for (const Vec3& p : frame.positions) {
    for (double v : {p.x, p.y, p.z}) {
      out.push_back(',');
      detail::append_fixed(out, v);
    }
  }
}

}  // namespace

std::string_view joint_name(JointId joint) { return kJointNames[static_cast<std::size_t>(joint)]; }

char joint_letter(JointId joint) { return static_cast<char>('A' + static_cast<int>(joint)); }

PostureLabel label_from_code(int code) {
  if (code < 0 || code >= static_cast<int>(kNumPostures)) {
    throw InvalidArgument("posture code out of range: " + std::to_string(code));
  }
  return static_cast<PostureLabel>(code);
}

std::string_view label_name(PostureLabel label) {
  return kLabelNames[static_cast<std::size_t>(label)];
}

std::optional<PostureLabel> parse_label(std::string_view name) {
  name = detail::trim(name);
  for (std::size_t i = 0; i < kNumPostures; ++i) {
    if (kLabelNames[i] == name) return static_cast<PostureLabel>(i);
  }
  return std::nullopt;
}

std::optional<std::string> SkeletonFrame::validation_error() const {
  if (timestamp_ms < 0) return "negative timestamp";
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    if (!positions[j].finite()) return "non-finite coordinate for " + std::string(kJointNames[j]);
    if (!(positions[j].z > 0.0)) return std::string(kJointNames[j]) + " is not in front of the camera";
  }
  return std::nullopt;
}

Dataset::Dataset(std::vector<LabeledFrame> rows) : rows_(std::move(rows)) {
  for (const auto& r : rows_) ++counts_[static_cast<std::size_t>(r.label)];
}

void Dataset::add(LabeledFrame row) {
  ++counts_[static_cast<std::size_t>(row.label)];
  rows_.push_back(std::move(row));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.add(rows_.at(i));
  return out;
}

std::string dataset_header() {
  std::string h = "label,subject,timestamp_ms";
  for (auto name : kJointNames) {
    for (char axis : {'x', 'y', 'z'}) {
      h += ',';
      h += name;
      h += '_';
      h += axis;
    }
  }
  return h;
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty dataset file: missing header");
  ++line_no;
  if (detail::trim(line) != dataset_header()) throw ParseError("unexpected header", line_no);

  Dataset ds;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(detail::trim(line), ',');
    if (fields.size() != kDatasetColumns) {
      throw ParseError("expected " + std::to_string(kDatasetColumns) + " columns, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    LabeledFrame row;
    const auto label = parse_label(fields[0]);
    if (!label) throw ParseError("unknown label '" + std::string(fields[0]) + "'", line_no);
    row.label = *label;
    const auto subject = detail::parse_int<int>(fields[1]);
    if (!subject) throw ParseError("non-integer subject id", line_no);
    row.subject_id = *subject;
    const auto ts = detail::parse_int<std::int64_t>(fields[2]);
    if (!ts || *ts < 0) throw ParseError("invalid timestamp", line_no);
    row.frame.timestamp_ms = *ts;
    row.frame.positions = parse_coordinates(std::span(fields).subspan(3), line_no);
    if (auto err = row.frame.validation_error()) throw ParseError(*err, line_no);
    ds.add(std::move(row));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset '" + path.string() + "'");
  try {
    return read_dataset(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  if (dataset.empty()) throw InvalidArgument("refusing to write an empty dataset");
  out << dataset_header() << '\n';
  std::string line;
  for (const auto& row : dataset.rows()) {
    line.clear();
    line += label_name(row.label);
    line += ',';
    line += std::to_string(row.subject_id);
    line += ',';
    line += std::to_string(row.frame.timestamp_ms);
    append_coordinates(line, row.frame);
    line += '\n';
    out << line;
  }
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  if (dataset.empty()) throw InvalidArgument("refusing to write an empty dataset");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_dataset(dataset, out);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

SkeletonFrame parse_stream_line(std::string_view line, std::size_t line_number) {
  const auto fields = detail::split(detail::trim(line), ',');
  if (fields.size() != 1 + kCoordColumns) {
    throw ParseError("expected " + std::to_string(1 + kCoordColumns) + " fields, found " +
                         std::to_string(fields.size()),
                     line_number);
  }
  SkeletonFrame frame;
  const auto ts = detail::parse_int<std::int64_t>(fields[0]);
  if (!ts || *ts < 0) throw ParseError("invalid timestamp", line_number);
  frame.timestamp_ms = *ts;
  frame.positions = parse_coordinates(std::span(fields).subspan(1), line_number);
  if (auto err = frame.validation_error()) throw ParseError(*err, line_number);
  return frame;
}

std::string format_stream_line(const SkeletonFrame& frame) {
  std::string line = std::to_string(frame.timestamp_ms);
  append_coordinates(line, frame);
  return line;
}

}  // namespace sitpose
