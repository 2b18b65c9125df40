#include "zsmstm/data/synthetic.hpp"

#include <cmath>

namespace zsmstm::data {

namespace {

// Seed streams for the independent random draws of one corpus.
enum : uint64_t {
  kStreamBasis = 1,
  kStreamTextProj = 2,
  kStreamStyle = 3,
  kStreamContent = 4,
  kStreamMelNoise = 5,
  kStreamTextNoise = 6,
  kStreamPosture = 7,
};

constexpr double kPi = 3.14159265358979323846;
constexpr double kOscScale = 0.02;

// Rest pose in screen units (y grows downward), roughly a seated speaker.
constexpr double kRestPose[kPoseDim] = {
    0.50, 0.18,  // NOSE
    0.50, 0.32,  // NECK
    0.38, 0.33,  // R_SHOULDER
    0.33, 0.48,  // R_ELBOW
    0.31, 0.62,  // R_WRIST
    0.62, 0.33,  // L_SHOULDER
    0.67, 0.48,  // L_ELBOW
    0.69, 0.62,  // L_WRIST
    0.47, 0.15,  // R_EYE
    0.53, 0.15,  // L_EYE
    0.50, 0.52,  // MID_SPINE
};

// +1 right arm, -1 left arm, 0 elsewhere; bias multiplies oscillation only.
double side_sign(int coord) {
  const int joint = coord / 2;
  if (joint >= 2 && joint <= 4) return 1.0;
  if (joint >= 5 && joint <= 7) return -1.0;
  return 0.0;
}

uint64_t segment_stream(int speaker, int clip, int segment) {
  return kStreamContent + 100 * (static_cast<uint64_t>(speaker) * 1000003 +
                                 static_cast<uint64_t>(clip) * 1009 +
                                 static_cast<uint64_t>(segment));
}

std::array<double, kContentDim> sample_content(Rng& rng) {
  std::array<double, kContentDim> c{};
  for (double& v : c) {
    v = rng.normal();
    if (v > 3.0) v = 3.0;
    if (v < -3.0) v = -3.0;
  }
  return c;
}

}  // namespace

SynthBasis make_basis(uint64_t corpus_seed) {
  SynthBasis b;
  b.osc = nn::Tensor<double>(kPoseDim, kContentDim);
  b.phase = nn::Tensor<double>(kPoseDim, kContentDim);
  Rng rng(derive_seed(corpus_seed, kStreamBasis));
  // Higher harmonics get proportionally smaller spatial magnitude, so their
  // velocity contributions match: the harmonic index k multiplies back in
  // when the sine is differentiated. Keeps per-segment dynamics tied to the
  // style amplitude instead of which content channels happen to be large.
  for (int j = 0; j < kPoseDim; ++j)
    for (int k = 0; k < kContentDim; ++k)
      b.osc.at(j, k) = rng.normal() * kOscScale / (k + 1);
  for (auto& v : b.phase.data) v = rng.uniform(0.0, 2.0 * kPi);
  b.text_proj = nn::Tensor<double>(kTextDim, kContentDim);
  Rng proj_rng(derive_seed(corpus_seed, kStreamTextProj));
  const double scale = 1.0 / std::sqrt(static_cast<double>(kContentDim));
  for (auto& v : b.text_proj.data) v = proj_rng.normal() * scale;
  return b;
}

SyntheticStyle sample_style(uint64_t corpus_seed, int speaker_index) {
  Rng rng(derive_seed(derive_seed(corpus_seed, kStreamStyle),
                      static_cast<uint64_t>(speaker_index)));
  SyntheticStyle s;
  s.amplitude = rng.uniform(0.5, 2.0);
  // Tempo and bias stay in a narrower band than their legal ranges so that
  // amplitude dominates the wrist-dynamics variance (the corpus has to make
  // style recoverable from pose statistics).
  s.tempo = rng.uniform(0.95, 1.05);
  s.handedness_bias = rng.uniform(-0.3, 0.3);
  Rng posture(derive_seed(derive_seed(corpus_seed, kStreamPosture),
                          static_cast<uint64_t>(speaker_index)));
  for (int j = 0; j < kPoseDim; ++j)
    s.base_posture[j] = kRestPose[j] + posture.uniform(-0.05, 0.05);
  return s;
}

nn::Tensor<double> render_poses(const SyntheticStyle& style,
                                const std::array<double, kContentDim>& content,
                                const SynthBasis& basis) {
  nn::Tensor<double> poses(kSegmentFrames, kPoseDim);
  for (int t = 0; t < kSegmentFrames; ++t) {
    for (int j = 0; j < kPoseDim; ++j) {
      double osc = 0;
      for (int k = 0; k < kContentDim; ++k)
        osc += content[k] * basis.osc.at(j, k) *
               std::sin(2.0 * kPi * style.tempo * (k + 1) * t /
                            kSegmentFrames +
                        basis.phase.at(j, k));
      const double side = 1.0 + side_sign(j) * style.handedness_bias;
      poses.at(t, j) = style.base_posture[j] + side * style.amplitude * osc;
    }
  }
  return poses;
}

nn::Tensor<double> render_mel(const SyntheticStyle& style,
                              const std::array<double, kContentDim>& content,
                              int mel_frames, Rng& noise) {
  nn::Tensor<double> mel(kMelBins, mel_frames);
  const int band_width = kMelBins / kContentDim;
  for (int t = 0; t < mel_frames; ++t) {
    const double envelope =
        1.0 + 0.5 * std::sin(2.0 * kPi * style.tempo * t / mel_frames);
    for (int bin = 0; bin < kMelBins; ++bin) {
      const double energy = std::abs(content[bin / band_width]) * envelope;
      mel.at(bin, t) = energy + 0.05 * noise.normal();
    }
  }
  return mel;
}

std::vector<double> render_text(const std::array<double, kContentDim>& content,
                                const SynthBasis& basis, Rng& noise) {
  std::vector<double> text(kTextDim);
  for (int i = 0; i < kTextDim; ++i) {
    double v = 0;
    for (int k = 0; k < kContentDim; ++k)
      v += basis.text_proj.at(i, k) * content[k];
    text[i] = v + 0.01 * noise.normal();
  }
  return text;
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  if (cfg.n_seen < 1 || cfg.n_unseen < 0 || cfg.clips_per_speaker < 1 ||
      cfg.segments_per_clip < 1 || cfg.mel_frames < 1)
    throw_data("data::SchemaViolation", "synthetic corpus counts must be >= 1");

  Dataset ds;
  ds.fps = cfg.fps;
  const SynthBasis basis = make_basis(cfg.seed);
  const int n_speakers = cfg.n_seen + cfg.n_unseen;

  for (int sp = 0; sp < n_speakers; ++sp) {
    const bool seen = sp < cfg.n_seen;
    SpeakerInfo info;
    info.id = (seen ? "seen" : "unseen") +
              std::to_string(seen ? sp : sp - cfg.n_seen);
    info.seen = seen;
    ds.speakers.push_back(info);

    const SyntheticStyle style = sample_style(cfg.seed, sp);
    for (int ci = 0; ci < cfg.clips_per_speaker; ++ci) {
      Clip clip;
      clip.speaker_id = info.id;
      clip.id = info.id + "_c" + std::to_string(ci);
      // Unseen speakers are test-only. Seen speakers hold out their last
      // clip for test and, when there are at least three, the one before it
      // for validation.
      const int last = cfg.clips_per_speaker - 1;
      if (!seen)
        clip.split = Split::Test;
      else if (ci == last && cfg.clips_per_speaker >= 2)
        clip.split = Split::Test;
      else if (ci == last - 1 && cfg.clips_per_speaker >= 3)
        clip.split = Split::Val;
      else
        clip.split = Split::Train;

      for (int si = 0; si < cfg.segments_per_clip; ++si) {
        Rng content_rng(
            derive_seed(cfg.seed, segment_stream(sp, ci, si)));
        const auto content = sample_content(content_rng);
        Rng mel_noise(derive_seed(
            derive_seed(cfg.seed, kStreamMelNoise), segment_stream(sp, ci, si)));
        Rng text_noise(derive_seed(derive_seed(cfg.seed, kStreamTextNoise),
                                   segment_stream(sp, ci, si)));
        Segment seg;
        seg.text = render_text(content, basis, text_noise);
        seg.mel = render_mel(style, content, cfg.mel_frames, mel_noise);
        seg.poses = render_poses(style, content, basis);
        clip.segments.push_back(std::move(seg));
      }
      ds.clips.push_back(std::move(clip));
    }
  }
  return ds;
}

}  // namespace zsmstm::data
