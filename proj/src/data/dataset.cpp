#include "zsmstm/data/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace zsmstm::data {

namespace fs = std::filesystem;
using nlohmann::json;

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw_data("data::SchemaViolation", "unknown split: " + name);
}

const SpeakerInfo* Dataset::find_speaker(const std::string& id) const {
  for (const auto& s : speakers)
    if (s.id == id) return &s;
  return nullptr;
}

const std::vector<Segment>& segment_view(const Clip& clip) {
  return clip.segments;
}

namespace {

void append_float(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  out += buf;
}

void append_row(std::string& out, const double* row, int n) {
  out += '[';
  for (int i = 0; i < n; ++i) {
    if (i) out += ',';
    append_float(out, row[i]);
  }
  out += ']';
}

std::string segment_line(const Segment& seg) {
  std::string line;
  line.reserve(24 * (seg.text.size() + seg.mel.size() + seg.poses.size()) +
               64);
  line += "{\"text\":";
  append_row(line, seg.text.data(), static_cast<int>(seg.text.size()));
  line += ",\"mel\":[";
  for (int r = 0; r < seg.mel.rows; ++r) {
    if (r) line += ',';
    append_row(line, seg.mel.ptr() + static_cast<std::size_t>(r) * seg.mel.cols,
               seg.mel.cols);
  }
  line += ']';
  if (seg.has_poses()) {
    line += ",\"poses\":[";
    for (int r = 0; r < seg.poses.rows; ++r) {
      if (r) line += ',';
      append_row(line,
                 seg.poses.ptr() + static_cast<std::size_t>(r) * seg.poses.cols,
                 seg.poses.cols);
    }
    line += ']';
  }
  line += '}';
  return line;
}

std::vector<double> parse_vector(const json& arr, std::size_t want,
                                 const std::string& where) {
  if (!arr.is_array() || (want != 0 && arr.size() != want))
    throw_data("data::BadShape",
               where + ": expected " + std::to_string(want) + " values, got " +
                   std::to_string(arr.is_array() ? arr.size() : 0));
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number())
      throw_data("data::SchemaViolation", where + ": non-numeric entry");
    out.push_back(v.get<double>());
  }
  return out;
}

nn::Tensor<double> parse_matrix(const json& arr, int want_rows, int want_cols,
                                const std::string& where) {
  if (!arr.is_array() || arr.empty())
    throw_data("data::BadShape", where + ": expected a non-empty matrix");
  const int rows = static_cast<int>(arr.size());
  if (want_rows != 0 && rows != want_rows)
    throw_data("data::BadShape", where + ": expected " +
                                     std::to_string(want_rows) +
                                     " rows, got " + std::to_string(rows));
  int cols = want_cols;
  if (cols == 0) {
    if (!arr[0].is_array() || arr[0].empty())
      throw_data("data::BadShape", where + ": first row is not a vector");
    cols = static_cast<int>(arr[0].size());
  }
  nn::Tensor<double> t(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto row = parse_vector(arr[r], static_cast<std::size_t>(cols),
                                  where + " row " + std::to_string(r));
    std::copy(row.begin(), row.end(),
              t.ptr() + static_cast<std::size_t>(r) * cols);
  }
  return t;
}

Segment parse_segment(const std::string& line, const std::string& where) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw_data("data::SchemaViolation", where + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("text") || !j.contains("mel"))
    throw_data("data::SchemaViolation",
               where + ": segment needs text and mel fields");
  Segment seg;
  seg.text = parse_vector(j["text"], kTextDim, where + " text");
  seg.mel = parse_matrix(j["mel"], kMelBins, 0, where + " mel");
  if (j.contains("poses"))
    seg.poses =
        parse_matrix(j["poses"], kSegmentFrames, kPoseDim, where + " poses");
  return seg;
}

Clip load_clip_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is)
    throw_data("data::MissingFile", "cannot open clip file " + path.string());
  Clip clip;
  clip.id = path.stem().string();
  std::string line;
  int index = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    clip.segments.push_back(parse_segment(
        line, clip.id + " segment " + std::to_string(index)));
    ++index;
  }
  if (clip.segments.empty())
    throw_data("data::SchemaViolation", "clip has no segments: " + path.string());
  return clip;
}

}  // namespace

Clip load_clip(const fs::path& path) { return load_clip_file(path); }

Dataset load_dataset(const fs::path& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is)
    throw_data("data::MissingFile",
               "cannot open manifest " + manifest_path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw_data("data::SchemaViolation",
               std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("version", 0) != 1)
    throw_data("data::SchemaViolation", "manifest version must be 1");
  if (!j.contains("speakers") || !j["speakers"].is_array() ||
      !j.contains("clips") || !j["clips"].is_array())
    throw_data("data::SchemaViolation",
               "manifest needs speakers and clips arrays");

  Dataset ds;
  ds.fps = j.value("fps", kDefaultFps);
  if (!(ds.fps > 0))
    throw_data("data::SchemaViolation", "manifest fps must be positive");

  for (const auto& sp : j["speakers"]) {
    if (!sp.contains("id") || !sp.contains("split_role"))
      throw_data("data::SchemaViolation",
                 "speaker entry needs id and split_role");
    SpeakerInfo info;
    info.id = sp["id"].get<std::string>();
    const std::string role = sp["split_role"].get<std::string>();
    if (role != "seen" && role != "unseen")
      throw_data("data::SchemaViolation",
                 "speaker " + info.id + ": split_role must be seen or unseen");
    info.seen = role == "seen";
    for (const auto& other : ds.speakers)
      if (other.id == info.id)
        throw_data("data::SchemaViolation", "duplicate speaker " + info.id);
    ds.speakers.push_back(info);
  }

  const fs::path base = manifest_path.parent_path();
  for (const auto& cj : j["clips"]) {
    if (!cj.contains("speaker_id") || !cj.contains("split") ||
        !cj.contains("path"))
      throw_data("data::SchemaViolation",
                 "clip entry needs speaker_id, split and path");
    const std::string speaker = cj["speaker_id"].get<std::string>();
    if (!ds.find_speaker(speaker))
      throw_data("data::SchemaViolation",
                 "clip references unknown speaker " + speaker);
    Clip clip = load_clip_file(base / cj["path"].get<std::string>());
    clip.speaker_id = speaker;
    clip.split = split_from_name(cj["split"].get<std::string>());
    ds.clips.push_back(std::move(clip));
  }
  if (ds.clips.empty())
    throw_data("data::SchemaViolation", "manifest lists no clips");
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir / "clips");
  json manifest;
  manifest["version"] = 1;
  manifest["fps"] = ds.fps;
  manifest["speakers"] = json::array();
  for (const auto& sp : ds.speakers)
    manifest["speakers"].push_back(
        {{"id", sp.id}, {"split_role", sp.seen ? "seen" : "unseen"}});
  manifest["clips"] = json::array();
  for (const auto& clip : ds.clips) {
    const std::string rel = "clips/" + clip.id + ".jsonl";
    manifest["clips"].push_back({{"speaker_id", clip.speaker_id},
                                 {"split", split_name(clip.split)},
                                 {"path", rel}});
    std::ofstream os(dir / rel, std::ios::trunc);
    if (!os)
      throw_data("data::MissingFile",
                 "cannot write clip file " + (dir / rel).string());
    for (const auto& seg : clip.segments) os << segment_line(seg) << '\n';
    if (!os)
      throw_data("data::MissingFile",
                 "write failed for clip file " + (dir / rel).string());
  }
  std::ofstream os(dir / "manifest.json", std::ios::trunc);
  if (!os)
    throw_data("data::MissingFile",
               "cannot write manifest in " + dir.string());
  os << manifest.dump(2) << '\n';
}

namespace {

struct StreamAccum {
  double sum = 0, sumsq = 0;
  std::size_t n = 0;

  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double stdev() const {
    const double mu = mean();
    const double var = sumsq / static_cast<double>(n) - mu * mu;
    return std::sqrt(var > 0 ? var : 0);
  }
};

template <typename F>
void for_each_segment(Dataset& ds, F f) {
  for (auto& clip : ds.clips)
    for (auto& seg : clip.segments) f(clip, seg);
}

}  // namespace

NormStats fit_and_normalize(Dataset& ds) {
  StreamAccum text, mel, pose;
  for (const auto& clip : ds.clips) {
    if (clip.split != Split::Train) continue;
    for (const auto& seg : clip.segments) {
      for (double v : seg.text) text.add(v);
      for (double v : seg.mel.data) mel.add(v);
      for (double v : seg.poses.data) pose.add(v);
    }
  }
  if (text.n == 0)
    throw_data("data::SchemaViolation",
               "no train split segments to fit normalization on");
  NormStats stats;
  stats.fitted = true;
  stats.text_mean = text.mean();
  stats.text_std = text.stdev();
  stats.mel_mean = mel.mean();
  stats.mel_std = mel.stdev();
  stats.pose_mean = pose.n ? pose.mean() : 0;
  stats.pose_std = pose.n ? pose.stdev() : 1;
  const struct {
    const char* name;
    double std;
  } streams[] = {{"text", stats.text_std},
                 {"mel", stats.mel_std},
                 {"pose", pose.n ? stats.pose_std : 1}};
  for (const auto& s : streams)
    if (s.std == 0)
      throw_data("data::DegenerateStream",
                 std::string(s.name) + " stream has zero standard deviation");
  apply_normalization(ds, stats);
  return stats;
}

void apply_normalization(Dataset& ds, const NormStats& stats) {
  if (!stats.fitted)
    throw_data("data::SchemaViolation",
               "normalization stats were never fitted");
  for_each_segment(ds, [&stats](Clip&, Segment& seg) {
    for (double& v : seg.text) v = (v - stats.text_mean) / (2 * stats.text_std);
    for (double& v : seg.mel.data)
      v = (v - stats.mel_mean) / (2 * stats.mel_std);
    for (double& v : seg.poses.data) v = stats.norm_pose(v);
  });
  ds.norm = stats;
}

std::string norm_stats_to_json(const NormStats& s) {
  json j;
  j["fitted"] = s.fitted;
  j["text_mean"] = s.text_mean;
  j["text_std"] = s.text_std;
  j["mel_mean"] = s.mel_mean;
  j["mel_std"] = s.mel_std;
  j["pose_mean"] = s.pose_mean;
  j["pose_std"] = s.pose_std;
  return j.dump();
}

NormStats norm_stats_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw_data("data::SchemaViolation",
               std::string("bad normalization stats: ") + e.what());
  }
  NormStats s;
  s.fitted = j.value("fitted", false);
  s.text_mean = j.value("text_mean", 0.0);
  s.text_std = j.value("text_std", 1.0);
  s.mel_mean = j.value("mel_mean", 0.0);
  s.mel_std = j.value("mel_std", 1.0);
  s.pose_mean = j.value("pose_mean", 0.0);
  s.pose_std = j.value("pose_std", 1.0);
  return s;
}

}  // namespace zsmstm::data
