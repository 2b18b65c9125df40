#pragma once

#include <filesystem>

#include "zsmstm/data/types.hpp"

namespace zsmstm::data {

// Corpus directory layout: a manifest.json listing speakers and clip files,
// clip payloads as JSON Lines (one segment per line). save/load round-trip
// bitwise because floats are written with full precision.

Dataset load_dataset(const std::filesystem::path& manifest_path);

void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

// One clip outside any manifest (transfer sources/targets). Poses may be
// absent per segment. The caller supplies fps since a bare clip has none.
Clip load_clip(const std::filesystem::path& path);

// Whitens text/mel/pose streams to mean 0, std 0.5. Stats come from the
// train split only and are applied to every split. Mutates in place, records
// the stats on the dataset and returns them.
NormStats fit_and_normalize(Dataset& ds);

void apply_normalization(Dataset& ds, const NormStats& stats);

const std::vector<Segment>& segment_view(const Clip& clip);

std::string norm_stats_to_json(const NormStats& s);
NormStats norm_stats_from_json(const std::string& json_text);

}  // namespace zsmstm::data
