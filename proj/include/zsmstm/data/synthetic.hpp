#pragma once

#include "zsmstm/data/types.hpp"

namespace zsmstm::data {

struct SynthConfig {
  int n_seen = 6;
  int n_unseen = 2;
  int clips_per_speaker = 4;
  int segments_per_clip = 3;
  uint64_t seed = 7;
  double fps = kDefaultFps;
  int mel_frames = kDefaultMelFrames;
};

// Fixed per-corpus ingredients shared by every speaker: the oscillation basis
// and phases (22 coords x 8 content channels) and the 8 -> 768 text
// projection.
struct SynthBasis {
  nn::Tensor<double> osc;    // kPoseDim x 8
  nn::Tensor<double> phase;  // kPoseDim x 8
  nn::Tensor<double> text_proj;  // kTextDim x 8
};

inline constexpr int kContentDim = 8;

SynthBasis make_basis(uint64_t corpus_seed);

SyntheticStyle sample_style(uint64_t corpus_seed, int speaker_index);

// Pose frames for one segment: coordinate j of frame t is
//   base_j + side_j(bias) * amplitude * sum_k c_k * osc[j,k]
//            * sin(2*pi*tempo*k*t/64 + phase[j,k])
// where side scales the left arm by (1 - bias) and the right arm by
// (1 + bias). Exactly linear in amplitude by construction.
nn::Tensor<double> render_poses(const SyntheticStyle& style,
                                const std::array<double, kContentDim>& content,
                                const SynthBasis& basis);

// Mel energy: |c| over 8 bands times a tempo-modulated envelope, each band
// replicated to 16 adjacent bins, plus Gaussian noise sigma = 0.05.
nn::Tensor<double> render_mel(const SyntheticStyle& style,
                              const std::array<double, kContentDim>& content,
                              int mel_frames, Rng& noise);

// Text embedding: fixed projection of the content vector plus noise 0.01.
std::vector<double> render_text(const std::array<double, kContentDim>& content,
                                const SynthBasis& basis, Rng& noise);

Dataset generate_synthetic(const SynthConfig& cfg);

}  // namespace zsmstm::data
