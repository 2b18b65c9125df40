#pragma once

#include <filesystem>

#include "zsmstm/data/types.hpp"

namespace zsmstm::data {

// Pose sequences as JSON Lines: a header object {fps, frame_count, pose_dim}
// followed by one array of coordinates per frame. Full-precision floats, so
// save/load round-trips bitwise.
void save_pose_jsonl(const PoseSequence& seq,
                     const std::filesystem::path& path);
PoseSequence load_pose_jsonl(const std::filesystem::path& path);

// Ground-truth poses of a clip as one sequence: segment blocks concatenated
// in order. Every segment must carry poses.
PoseSequence clip_pose_sequence(const Clip& clip, double fps);

// Lookup by clip id; throws data::UnknownClip.
const Clip& find_clip(const Dataset& ds, const std::string& id);

}  // namespace zsmstm::data
