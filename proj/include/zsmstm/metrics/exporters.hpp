#pragma once

#include <filesystem>

#include "zsmstm/data/types.hpp"
#include "zsmstm/train/transfer.hpp"

namespace zsmstm::metrics {

// One row per clip: speaker_id, split_role, clip_id, then the speech (mel),
// pose, text-component, and pooled style embeddings under frozen weights.
// split_role is the clip's split for seen speakers and "zero-shot" for
// clips of speakers held out of training entirely.
void write_embeddings_csv(const train::CheckpointBundle& bundle,
                          const data::Dataset& ds,
                          const std::filesystem::path& out_csv);

// Renders the sequence as one SVG stick figure per frame plus a JSON
// manifest {fps, frame_count, files, viewport}. The viewport block records
// the affine map from pose units to pixels so the drawings can be inverted.
// Returns the manifest path.
std::filesystem::path export_animation(const data::PoseSequence& seq,
                                       const std::filesystem::path& out_dir);

}  // namespace zsmstm::metrics
