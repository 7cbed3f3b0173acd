#include "proxymotion/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "proxymotion/errors.hpp"

namespace proxymotion {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void schema_error(const std::string& message) { throw Error(ErrorKind::kSchema, message); }

Json parse_json(std::string_view text, const char* what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {
    schema_error(std::string(what) + ": " + e.what());
  }
}

const Json& field(const Json& object, const char* key) {
  if (!object.is_object()) schema_error("expected an object");
  const auto it = object.find(key);
  if (it == object.end()) schema_error(std::string("missing field '") + key + "'");
  return *it;
}

double number(const Json& value, const char* what) {
  if (!value.is_number()) schema_error(std::string(what) + " must be a number");
  return value.get<double>();
}

int integer(const Json& value, const char* what) {
  if (!value.is_number_integer()) schema_error(std::string(what) + " must be an integer");
  return value.get<int>();
}

Vec3 vec3(const Json& value, const char* what) {
  if (!value.is_array() || value.size() != 3) schema_error(std::string(what) + " must be a 3-array");
  return {number(value[0], what), number(value[1], what), number(value[2], what)};
}

Json vec3_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

// Integral rates are written as integers so hand-written files round-trip.
Json fps_json(double fps) {
  if (std::floor(fps) == fps && std::abs(fps) < 1e9) return static_cast<std::int64_t>(fps);
  return fps;
}

void check_version(const Json& root) {
  if (integer(field(root, "version"), "version") != kFormatVersion) {
    schema_error("unsupported format version");
  }
}

Json box_json(const BoxPose& box) {
  Json j = Json::object();
  j["c"] = vec3_json(box.center());
  const Quat& q = box.rotation();
  j["q"] = Json::array({q.w(), q.x(), q.y(), q.z()});
  j["e"] = vec3_json(box.half_extents());
  return j;
}

BoxPose box_from_json(const Json& j) {
  const Json& q = field(j, "q");
  if (!q.is_array() || q.size() != 4) schema_error("q must be a 4-array");
  const Quat rotation(number(q[0], "q"), number(q[1], "q"), number(q[2], "q"), number(q[3], "q"));
  return BoxPose(vec3(field(j, "c"), "c"), rotation, vec3(field(j, "e"), "e"));
}

}  // namespace

CaptureSession parse_capture(std::string_view content) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) schema_error("capture file is empty");

  const Json header = parse_json(lines.front(), "capture header");
  check_version(header);
  const double fps = number(field(header, "fps"), "fps");
  const int ground = integer(field(header, "ground_segment_id"), "ground_segment_id");

  std::vector<std::vector<CapturePoint>> frames;
  std::vector<PointTrack> tracks;
  bool saw_tracks = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const Json line = parse_json(lines[i], "capture line");
    if (!line.is_object()) schema_error("capture lines must be objects");
    if (saw_tracks) schema_error("tracks block must be the last line");
    if (line.contains("tracks")) {
      saw_tracks = true;
      const Json& list = line["tracks"];
      if (!list.is_array()) schema_error("tracks must be an array");
      for (const Json& t : list) {
        PointTrack track;
        track.id = integer(field(t, "id"), "track id");
        track.segment_id = integer(field(t, "segment"), "track segment");
        const Json& pos = field(t, "pos");
        const Json& vis = field(t, "vis");
        if (!pos.is_array() || !vis.is_array()) schema_error("track pos/vis must be arrays");
        for (const Json& p : pos) {
          if (p.is_null()) {
            track.positions.emplace_back(std::nullopt);
          } else {
            track.positions.emplace_back(vec3(p, "track position"));
          }
        }
        for (const Json& v : vis) {
          if (!v.is_boolean()) schema_error("track visibility must be boolean");
          track.visible.push_back(v.get<bool>());
        }
        tracks.push_back(std::move(track));
      }
      continue;
    }
    if (integer(field(line, "index"), "frame index") != static_cast<int>(frames.size())) {
      schema_error("frame indices must be consecutive from 0");
    }
    const Json& points = field(line, "points");
    if (!points.is_array()) schema_error("points must be an array");
    std::vector<CapturePoint> frame;
    frame.reserve(points.size());
    for (const Json& p : points) {
      if (!p.is_array() || p.size() != 5) schema_error("points must be [x,y,z,conf,seg]");
      frame.push_back({Vec3(number(p[0], "x"), number(p[1], "y"), number(p[2], "z")),
                       number(p[3], "confidence"), integer(p[4], "segment")});
    }
    frames.push_back(std::move(frame));
  }
  if (frames.empty()) schema_error("capture has no frames");
  return CaptureSession(fps, std::move(frames), std::move(tracks), ground);
}

std::string serialize_capture(const CaptureSession& session) {
  std::string out;
  Json header = Json::object();
  header["version"] = kFormatVersion;
  header["fps"] = fps_json(session.fps());
  header["ground_segment_id"] = session.ground_segment_id();
  out += header.dump();
  out += '\n';
  for (int f = 0; f < session.num_frames(); ++f) {
    Json line = Json::object();
    line["index"] = f;
    Json points = Json::array();
    for (const auto& p : session.frames()[static_cast<std::size_t>(f)]) {
      points.push_back(Json::array(
          {p.position.x(), p.position.y(), p.position.z(), p.confidence, p.segment_id}));
    }
    line["points"] = std::move(points);
    out += line.dump();
    out += '\n';
  }
  Json tracks = Json::array();
  for (const auto& track : session.tracks()) {
    Json t = Json::object();
    t["id"] = track.id;
    t["segment"] = track.segment_id;
    Json pos = Json::array();
    for (const auto& p : track.positions) pos.push_back(p ? vec3_json(*p) : Json(nullptr));
    t["pos"] = std::move(pos);
    Json vis = Json::array();
    for (bool v : track.visible) vis.push_back(v);
    t["vis"] = std::move(vis);
    tracks.push_back(std::move(t));
  }
  Json block = Json::object();
  block["tracks"] = std::move(tracks);
  out += block.dump();
  out += '\n';
  return out;
}

BoxMotionSequence parse_boxes(std::string_view content) {
  const Json root = parse_json(content, "boxes");
  check_version(root);
  const double fps = number(field(root, "fps"), "fps");
  const int num_boxes = integer(field(root, "num_boxes"), "num_boxes");
  const Json& frames_json = field(root, "frames");
  if (!frames_json.is_array()) schema_error("frames must be an array");
  std::vector<BoxMotionSequence::Frame> frames;
  frames.reserve(frames_json.size());
  for (const Json& fj : frames_json) {
    if (!fj.is_array()) schema_error("each frame must be an array of boxes");
    BoxMotionSequence::Frame frame;
    for (const Json& bj : fj) {
      if (bj.is_null()) {
        frame.emplace_back(std::nullopt);
      } else {
        frame.emplace_back(box_from_json(bj));
      }
    }
    frames.push_back(std::move(frame));
  }
  return BoxMotionSequence(fps, num_boxes, std::move(frames));
}

std::string serialize_boxes(const BoxMotionSequence& sequence) {
  Json root = Json::object();
  root["version"] = kFormatVersion;
  root["fps"] = fps_json(sequence.fps());
  root["num_boxes"] = sequence.num_boxes();
  Json frames = Json::array();
  for (const auto& frame : sequence.frames()) {
    Json fj = Json::array();
    for (const auto& slot : frame) fj.push_back(slot ? box_json(*slot) : Json(nullptr));
    frames.push_back(std::move(fj));
  }
  root["frames"] = std::move(frames);
  return root.dump() + "\n";
}

SkeletonMotion parse_motion(std::string_view content) {
  const Json root = parse_json(content, "motion");
  check_version(root);
  const double fps = number(field(root, "fps"), "fps");
  const Json& skeleton = field(root, "skeleton");
  if (!skeleton.is_string()) schema_error("skeleton must be a string");
  const Json& label_json = field(root, "label");
  std::optional<std::string> label;
  if (label_json.is_string()) {
    label = label_json.get<std::string>();
  } else if (!label_json.is_null()) {
    schema_error("label must be a string or null");
  }
  const Json& frames = field(root, "joints");
  if (!frames.is_array() || frames.empty()) schema_error("joints must be a nonempty array");
  const std::size_t num_joints = frames[0].is_array() ? frames[0].size() : 0;
  if (num_joints == 0) schema_error("frames need at least one joint");
  Eigen::MatrixXd joints(static_cast<Eigen::Index>(frames.size()), static_cast<Eigen::Index>(3 * num_joints));
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (!frames[f].is_array() || frames[f].size() != num_joints) {
      schema_error("every frame must have the same joint count");
    }
    for (std::size_t j = 0; j < num_joints; ++j) {
      joints.row(static_cast<Eigen::Index>(f)).segment<3>(static_cast<Eigen::Index>(3 * j)) =
          vec3(frames[f][j], "joint").transpose();
    }
  }
  return SkeletonMotion(fps, skeleton.get<std::string>(), std::move(joints), std::move(label));
}

std::string serialize_motion(const SkeletonMotion& motion) {
  Json root = Json::object();
  root["version"] = kFormatVersion;
  root["fps"] = fps_json(motion.fps());
  root["skeleton"] = motion.skeleton();
  root["label"] = motion.label() ? Json(*motion.label()) : Json(nullptr);
  Json frames = Json::array();
  for (int f = 0; f < motion.num_frames(); ++f) {
    Json frame = Json::array();
    for (int j = 0; j < motion.num_joints(); ++j) frame.push_back(vec3_json(motion.joint(f, j)));
    frames.push_back(std::move(frame));
  }
  root["joints"] = std::move(frames);
  return root.dump() + "\n";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

}  // namespace proxymotion
