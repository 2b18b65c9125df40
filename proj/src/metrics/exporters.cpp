// Embedding CSV export and SVG stick-figure rendering.

#include "zsmstm/metrics/exporters.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "zsmstm/common.hpp"
#include "zsmstm/data/dataset.hpp"

namespace zsmstm::metrics {

namespace {

constexpr int kCanvas = 512;
constexpr double kMargin = 24.0;

// Skeleton edges by joint index: nose-neck, neck-shoulders,
// shoulders-elbows, elbows-wrists, nose-eyes, neck-spine.
constexpr int kEdges[10][2] = {{0, 1}, {1, 2}, {1, 5}, {2, 3}, {5, 6},
                               {3, 4}, {6, 7}, {0, 8}, {0, 9}, {1, 10}};

[[noreturn]] void throw_io(const std::string& msg) {
  throw Error(ErrorKind::Io, "metrics::IoError", msg);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void append_vector(std::string& row, const nn::Tensor<float>& v) {
  for (float x : v.data) {
    row += ',';
    row += fmt(static_cast<double>(x));
  }
}

}  // namespace

void write_embeddings_csv(const train::CheckpointBundle& bundle,
                          const data::Dataset& ds,
                          const std::filesystem::path& out_csv) {
  std::ofstream os(out_csv, std::ios::trunc);
  if (!os) throw_io("cannot open " + out_csv.string());

  const model::ModelConfig& c = bundle.cfg;
  std::string header = "speaker_id,split_role,clip_id";
  auto columns = [&header](const char* stem, int n) {
    for (int i = 0; i < n; ++i)
      header += "," + std::string(stem) + "_" + std::to_string(i);
  };
  columns("mel", c.d_model);
  columns("pose", c.pose_lstm_hidden);
  columns("text", c.text_fused_dim());
  columns("style", c.h_style_dim());
  os << header << "\n";

  for (const data::Clip& clip : ds.clips) {
    const data::SpeakerInfo* sp = ds.find_speaker(clip.speaker_id);
    const bool seen = sp == nullptr || sp->seen;
    const std::string role =
        seen ? data::split_name(clip.split) : "zero-shot";
    const train::ClipEmbeddings e = train::embed_clip(bundle, clip);
    std::string row = clip.speaker_id + "," + role + "," + clip.id;
    append_vector(row, e.speech);
    append_vector(row, e.pose);
    append_vector(row, e.text);
    append_vector(row, e.style);
    os << row << "\n";
    if (!os) throw_io("write failed on " + out_csv.string());
  }
  os.flush();
  if (!os) throw_io("flush failed on " + out_csv.string());
}

std::filesystem::path export_animation(const data::PoseSequence& seq,
                                       const std::filesystem::path& out_dir) {
  if (seq.frames() < 1)
    throw_data("metrics::TooShort", "animation needs at least one frame");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw_io("cannot create " + out_dir.string());

  // One shared viewport over the whole sequence so frames line up.
  double min_x = seq.x(0, 0), max_x = min_x;
  double min_y = seq.y(0, 0), max_y = min_y;
  for (int t = 0; t < seq.frames(); ++t)
    for (int j = 0; j < data::kNumJoints; ++j) {
      min_x = std::min(min_x, seq.x(t, j));
      max_x = std::max(max_x, seq.x(t, j));
      min_y = std::min(min_y, seq.y(t, j));
      max_y = std::max(max_y, seq.y(t, j));
    }
  const double usable = kCanvas - 2 * kMargin;
  const double w = max_x - min_x, h = max_y - min_y;
  double scale = 1.0;
  if (w > 0 || h > 0) scale = usable / std::max(w, h);
  auto px = [&](double x) { return kMargin + (x - min_x) * scale; };
  auto py = [&](double y) { return kMargin + (y - min_y) * scale; };

  std::vector<std::string> files;
  files.reserve(static_cast<std::size_t>(seq.frames()));
  for (int t = 0; t < seq.frames(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05d.svg", t);
    files.emplace_back(name);
    std::ofstream os(out_dir / name, std::ios::trunc);
    if (!os) throw_io("cannot open " + (out_dir / name).string());
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvas
       << "\" height=\"" << kCanvas << "\" viewBox=\"0 0 " << kCanvas << " "
       << kCanvas << "\">\n";
    for (const auto& edge : kEdges)
      os << "  <line x1=\"" << fmt(px(seq.x(t, edge[0]))) << "\" y1=\""
         << fmt(py(seq.y(t, edge[0]))) << "\" x2=\""
         << fmt(px(seq.x(t, edge[1]))) << "\" y2=\""
         << fmt(py(seq.y(t, edge[1])))
         << "\" stroke=\"#444\" stroke-width=\"3\"/>\n";
    for (int j = 0; j < data::kNumJoints; ++j)
      os << "  <circle cx=\"" << fmt(px(seq.x(t, j))) << "\" cy=\""
         << fmt(py(seq.y(t, j))) << "\" r=\"5\" fill=\"#c22\"/>\n";
    os << "</svg>\n";
    if (!os) throw_io("write failed on " + (out_dir / name).string());
  }

  nlohmann::ordered_json manifest;
  manifest["fps"] = seq.fps;
  manifest["frame_count"] = seq.frames();
  manifest["files"] = files;
  manifest["viewport"] = {{"width", kCanvas},   {"height", kCanvas},
                          {"margin", kMargin},  {"min_x", min_x},
                          {"min_y", min_y},     {"scale", scale}};
  const std::filesystem::path manifest_path = out_dir / "manifest.json";
  std::ofstream os(manifest_path, std::ios::trunc);
  if (!os) throw_io("cannot open " + manifest_path.string());
  os << manifest.dump(2) << "\n";
  if (!os) throw_io("write failed on " + manifest_path.string());
  return manifest_path;
}

}  // namespace zsmstm::metrics
