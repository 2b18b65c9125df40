#pragma once

#include <array>
#include <string>
#include <vector>

#include "zsmstm/nn/tensor.hpp"

namespace zsmstm::data {

// Canonical upper-body joint order. Indices are load-bearing: the wrist
// metrics and the rendering skeleton address joints by these positions.
inline constexpr int kNumJoints = 11;
inline constexpr int kPoseDim = 2 * kNumJoints;
inline constexpr int kRightWrist = 4;
inline constexpr int kLeftWrist = 7;

inline constexpr const char* kJointNames[kNumJoints] = {
    "NOSE",       "NECK",    "R_SHOULDER", "R_ELBOW", "R_WRIST", "L_SHOULDER",
    "L_ELBOW",    "L_WRIST", "R_EYE",      "L_EYE",   "MID_SPINE"};

inline constexpr int kSegmentFrames = 64;
inline constexpr int kTextDim = 768;
inline constexpr int kMelBins = 128;
inline constexpr int kDefaultMelFrames = 64;
inline constexpr double kDefaultFps = 15.0;

enum class Split { Train, Val, Test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

// frames x 22 row-major, (x, y) pairs per joint in screen units.
struct PoseSequence {
  double fps = kDefaultFps;
  nn::Tensor<double> values;

  int frames() const { return values.rows; }
  double x(int frame, int joint) const { return values.at(frame, 2 * joint); }
  double y(int frame, int joint) const {
    return values.at(frame, 2 * joint + 1);
  }
};

struct Segment {
  std::vector<double> text;    // kTextDim
  nn::Tensor<double> mel;      // kMelBins x F_t
  nn::Tensor<double> poses;    // kSegmentFrames x kPoseDim, may be absent
  bool has_poses() const { return poses.rows > 0; }
};

struct Clip {
  std::string id;
  std::string speaker_id;
  Split split = Split::Train;
  std::vector<Segment> segments;
};

struct SpeakerInfo {
  std::string id;
  bool seen = true;
};

// Scalar whitening per feature stream: x' = (x - mean) / (2 std), which puts
// the stream at mean 0 and standard deviation 0.5.
struct NormStats {
  bool fitted = false;
  double text_mean = 0, text_std = 1;
  double mel_mean = 0, mel_std = 1;
  double pose_mean = 0, pose_std = 1;

  double norm_pose(double x) const { return (x - pose_mean) / (2 * pose_std); }
  double denorm_pose(double x) const { return 2 * pose_std * x + pose_mean; }
};

struct Dataset {
  double fps = kDefaultFps;
  std::vector<SpeakerInfo> speakers;
  std::vector<Clip> clips;
  NormStats norm;

  const SpeakerInfo* find_speaker(const std::string& id) const;
};

// Latent per-speaker gesture character of the synthetic corpus.
struct SyntheticStyle {
  double amplitude = 1.0;          // [0.5, 2.0]
  double tempo = 1.0;              // [0.5, 2.0]
  double handedness_bias = 0.0;    // [-1, 1]
  std::array<double, kPoseDim> base_posture{};
};

}  // namespace zsmstm::data
