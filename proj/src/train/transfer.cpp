// Checkpoint rehydration and zero-shot inference: style transfer between
// clips and frozen-weight clip embeddings.
#include "zsmstm/train/transfer.hpp"

#include <string>
#include <utility>

#include "json.hpp"
#include "zsmstm/data/dataset.hpp"
#include "zsmstm/nn/checkpoint.hpp"

namespace zsmstm::train {

namespace {

using json = nlohmann::json;
using model::SegmentInput;
using nn::Tensor;

// Mean over rows, computed outside any graph.
Tensor<float> column_means(const Tensor<float>& m) {
  Tensor<float> out(1, m.cols);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) out.at(0, c) += m.at(r, c);
  for (int c = 0; c < m.cols; ++c) out.at(0, c) /= static_cast<float>(m.rows);
  return out;
}

}  // namespace

CheckpointBundle load_bundle(const std::filesystem::path& checkpoint) {
  const std::string header = nn::read_checkpoint_header(checkpoint);
  json j;
  try {
    j = json::parse(header);
  } catch (const json::exception& e) {
    throw_data("train::BadCheckpoint",
               "header is not valid JSON: " + std::string(e.what()));
  }
  for (const char* key : {"model", "norm", "ablate", "fps"})
    if (!j.contains(key))
      throw_data("train::BadCheckpoint",
                 "header missing field '" + std::string(key) + "'");
  CheckpointBundle b;
  b.cfg = model::ModelConfig::from_json(j["model"].dump());
  b.norm = data::norm_stats_from_json(j["norm"].dump());
  if (!b.norm.fitted)
    throw_data("train::BadCheckpoint",
               "header carries unfitted normalization statistics");
  try {
    b.ablate = model::Ablate::parse(j["ablate"].get<std::string>());
  } catch (const json::exception&) {
    throw_data("train::BadCheckpoint", "ablate field is not a string");
  } catch (const Error&) {
    throw_data("train::BadCheckpoint", "unrecognized ablate flags in header");
  }
  if (!j["fps"].is_number() || j["fps"].get<double>() <= 0)
    throw_data("train::BadCheckpoint", "fps must be a positive number");
  b.fps = j["fps"].get<double>();
  b.net = std::make_unique<model::ZsMstm<float>>(b.cfg);
  b.step =
      nn::load_checkpoint<float>(checkpoint, b.net->params, nullptr, nullptr);
  return b;
}

std::vector<SegmentInput<float>> prepare_clip(const CheckpointBundle& bundle,
                                              const data::Clip& clip) {
  const model::ModelConfig& c = bundle.cfg;
  const data::NormStats& n = bundle.norm;
  if (clip.segments.empty())
    throw_data("train::IncompatibleConfig",
               "clip " + clip.id + " has no segments");
  std::vector<SegmentInput<float>> out;
  out.reserve(clip.segments.size());
  for (size_t s = 0; s < clip.segments.size(); ++s) {
    const data::Segment& seg = clip.segments[s];
    const std::string where =
        "clip " + clip.id + " segment " + std::to_string(s);
    if (static_cast<int>(seg.text.size()) != c.text_input_dim)
      throw_data("train::IncompatibleConfig",
                 where + ": text length " + std::to_string(seg.text.size()) +
                     ", checkpoint expects " +
                     std::to_string(c.text_input_dim));
    if (seg.mel.rows != c.mel_bins || seg.mel.cols != c.mel_frames)
      throw_data("train::IncompatibleConfig",
                 where + ": mel " + std::to_string(seg.mel.rows) + "x" +
                     std::to_string(seg.mel.cols) + ", checkpoint expects " +
                     std::to_string(c.mel_bins) + "x" +
                     std::to_string(c.mel_frames));
    if (seg.has_poses() &&
        (seg.poses.rows != c.seg_len || seg.poses.cols != c.pose_dim))
      throw_data("train::IncompatibleConfig",
                 where + ": poses " + std::to_string(seg.poses.rows) + "x" +
                     std::to_string(seg.poses.cols) + ", checkpoint expects " +
                     std::to_string(c.seg_len) + "x" +
                     std::to_string(c.pose_dim));
    SegmentInput<float> in;
    in.text = Tensor<float>(1, c.text_input_dim);
    for (int i = 0; i < c.text_input_dim; ++i)
      in.text.data[i] = static_cast<float>((seg.text[i] - n.text_mean) /
                                           (2 * n.text_std));
    in.mel = Tensor<float>(seg.mel.rows, seg.mel.cols);
    for (size_t i = 0; i < seg.mel.data.size(); ++i)
      in.mel.data[i] =
          static_cast<float>((seg.mel.data[i] - n.mel_mean) / (2 * n.mel_std));
    if (seg.has_poses()) {
      in.poses = Tensor<float>(seg.poses.rows, seg.poses.cols);
      for (size_t i = 0; i < seg.poses.data.size(); ++i)
        in.poses.data[i] = static_cast<float>(n.norm_pose(seg.poses.data[i]));
    }
    out.push_back(std::move(in));
  }
  return out;
}

ClipEmbeddings embed_clip(const CheckpointBundle& bundle,
                          const data::Clip& clip) {
  const auto segs = prepare_clip(bundle, clip);
  const model::ModelConfig& c = bundle.cfg;
  ClipEmbeddings e;
  e.content = Tensor<float>(static_cast<int>(segs.size()), c.d_att);
  nn::Graph<float> g;
  g.recording = false;
  for (size_t s = 0; s < segs.size(); ++s) {
    g.clear();
    const std::vector<SegmentInput<float>> window{segs[s]};
    nn::Var<float> hc = bundle.net->encode_content(g, window);
    for (int col = 0; col < c.d_att; ++col)
      e.content.at(static_cast<int>(s), col) = hc.at(0, col);
  }
  g.clear();
  model::StyleParts<float> parts =
      bundle.net->style_parts(g, segs, bundle.ablate);
  e.style = model::materialize(parts.clip);
  e.text = column_means(model::materialize(parts.text));
  e.speech = column_means(model::materialize(parts.speech));
  e.pose = column_means(model::materialize(parts.pose));
  return e;
}

data::PoseSequence transfer(const CheckpointBundle& bundle,
                            const data::Clip& source,
                            const std::vector<const data::Clip*>& targets) {
  if (targets.empty())
    throw_data("train::IncompatibleConfig",
               "style transfer needs at least one target clip");
  const auto src = prepare_clip(bundle, source);
  std::vector<SegmentInput<float>> style_segs;
  for (const data::Clip* t : targets) {
    auto prepared = prepare_clip(bundle, *t);
    for (auto& seg : prepared) style_segs.push_back(std::move(seg));
  }
  Tensor<float> h_style;
  {
    nn::Graph<float> g;
    g.recording = false;
    h_style = model::materialize(
        bundle.net->encode_style(g, style_segs, bundle.ablate));
  }
  const int seg_len = bundle.cfg.seg_len;
  const int pose_dim = bundle.cfg.pose_dim;
  data::PoseSequence out;
  out.fps = bundle.fps;
  out.values =
      Tensor<double>(static_cast<int>(src.size()) * seg_len, pose_dim);
  for (size_t s = 0; s < src.size(); ++s) {
    Tensor<float> hc;
    {
      nn::Graph<float> g;
      g.recording = false;
      const std::vector<SegmentInput<float>> window{src[s]};
      hc = model::materialize(bundle.net->encode_content(g, window));
    }
    const Tensor<float> gen =
        bundle.net->generator.autoregressive(hc, h_style);
    for (int f = 0; f < seg_len; ++f)
      for (int c = 0; c < pose_dim; ++c)
        out.values.at(static_cast<int>(s) * seg_len + f, c) =
            bundle.norm.denorm_pose(static_cast<double>(gen.at(f, c)));
  }
  return out;
}

}  // namespace zsmstm::train
