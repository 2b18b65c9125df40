#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "zsmstm/data/types.hpp"
#include "zsmstm/model/networks.hpp"

namespace zsmstm::train {

// A checkpoint rehydrated for inference: network weights plus everything the
// header carries (config, normalization statistics, ablation flags, fps).
struct CheckpointBundle {
  model::ModelConfig cfg;
  model::Ablate ablate;
  data::NormStats norm;
  double fps = data::kDefaultFps;
  uint64_t step = 0;
  std::unique_ptr<model::ZsMstm<float>> net;
};

CheckpointBundle load_bundle(const std::filesystem::path& checkpoint);

// Validates a clip against the bundle's config and returns normalized,
// model-ready segment inputs. Pose blocks are converted when present.
std::vector<model::SegmentInput<float>> prepare_clip(
    const CheckpointBundle& bundle, const data::Clip& clip);

// Per-clip embeddings under frozen weights, for probes and export.
struct ClipEmbeddings {
  nn::Tensor<float> content;  // one row per segment, width d_att
  nn::Tensor<float> style;    // 1 x (d_att + d_model)
  nn::Tensor<float> text;     // 1 x text_fused_dim, mean over segments
  nn::Tensor<float> speech;   // 1 x d_model, mean over segments
  nn::Tensor<float> pose;     // 1 x d_model, mean over segments
};

ClipEmbeddings embed_clip(const CheckpointBundle& bundle,
                          const data::Clip& clip);

// Zero-shot style transfer: content from the source clip, style pooled over
// the target clips, autoregressive generation, output in data units.
data::PoseSequence transfer(const CheckpointBundle& bundle,
                            const data::Clip& source,
                            const std::vector<const data::Clip*>& targets);

}  // namespace zsmstm::train
