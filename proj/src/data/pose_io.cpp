#include "zsmstm/data/pose_io.hpp"

#include <cstdio>
#include <fstream>
#include <string>

#include "json.hpp"

namespace zsmstm::data {

namespace fs = std::filesystem;
using nlohmann::json;

void save_pose_jsonl(const PoseSequence& seq, const fs::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os)
    throw_data("data::WriteFailed", "cannot open " + path.string());
  json header;
  header["fps"] = seq.fps;
  header["frame_count"] = seq.values.rows;
  header["pose_dim"] = seq.values.cols;
  os << header.dump() << '\n';
  char buf[32];
  for (int t = 0; t < seq.values.rows; ++t) {
    std::string line = "[";
    for (int c = 0; c < seq.values.cols; ++c) {
      if (c) line += ',';
      std::snprintf(buf, sizeof(buf), "%.16e", seq.values.at(t, c));
      line += buf;
    }
    line += ']';
    os << line << '\n';
  }
  if (!os) throw_data("data::WriteFailed", "write failed on " + path.string());
}

PoseSequence load_pose_jsonl(const fs::path& path) {
  std::ifstream is(path);
  if (!is)
    throw_data("data::MissingFile", "cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line))
    throw_data("data::SchemaViolation", "empty pose file " + path.string());
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw_data("data::SchemaViolation",
               "pose header is not valid JSON: " + std::string(e.what()));
  }
  if (!header.contains("fps") || !header.contains("frame_count") ||
      !header.contains("pose_dim"))
    throw_data("data::SchemaViolation",
               "pose header needs fps, frame_count, pose_dim");
  PoseSequence seq;
  seq.fps = header["fps"].get<double>();
  const int frames = header["frame_count"].get<int>();
  const int dim = header["pose_dim"].get<int>();
  if (seq.fps <= 0 || frames < 0 || dim < 1)
    throw_data("data::SchemaViolation", "pose header values out of range");
  seq.values = nn::Tensor<double>(frames, dim);
  for (int t = 0; t < frames; ++t) {
    if (!std::getline(is, line))
      throw_data("data::SchemaViolation",
                 "pose file ends at frame " + std::to_string(t) + " of " +
                     std::to_string(frames));
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw_data("data::SchemaViolation",
                 "pose frame is not valid JSON: " + std::string(e.what()));
    }
    if (!row.is_array() || static_cast<int>(row.size()) != dim)
      throw_data("data::SchemaViolation",
                 "pose frame " + std::to_string(t) + " needs " +
                     std::to_string(dim) + " numbers");
    for (int c = 0; c < dim; ++c)
      seq.values.at(t, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return seq;
}

PoseSequence clip_pose_sequence(const Clip& clip, double fps) {
  int frames = 0;
  for (const auto& seg : clip.segments) {
    if (!seg.has_poses())
      throw_data("data::SchemaViolation",
                 "clip " + clip.id + " has a segment without poses");
    frames += seg.poses.rows;
  }
  if (frames == 0)
    throw_data("data::SchemaViolation", "clip " + clip.id + " has no poses");
  PoseSequence seq;
  seq.fps = fps;
  seq.values = nn::Tensor<double>(frames, kPoseDim);
  int row = 0;
  for (const auto& seg : clip.segments) {
    if (seg.poses.cols != kPoseDim)
      throw_data("data::SchemaViolation",
                 "clip " + clip.id + " pose width " +
                     std::to_string(seg.poses.cols));
    for (int t = 0; t < seg.poses.rows; ++t, ++row)
      for (int c = 0; c < kPoseDim; ++c)
        seq.values.at(row, c) = seg.poses.at(t, c);
  }
  return seq;
}

const Clip& find_clip(const Dataset& ds, const std::string& id) {
  for (const auto& clip : ds.clips)
    if (clip.id == id) return clip;
  throw_data("data::UnknownClip", "no clip named " + id);
}

}  // namespace zsmstm::data
