#pragma once

#include <string>

#include "zsmstm/data/types.hpp"

namespace zsmstm::metrics {

enum class Scope { AllJoints, WristsOnly };

// Mean magnitudes of the first, second, and third finite differences of the
// joint trajectories, scaled by fps powers so the units are pose units per
// second (squared, cubed). Frames without a full stencil are dropped.
struct DynamicsReport {
  double velocity = 0;
  double acceleration = 0;
  double jerk = 0;
  Scope scope = Scope::AllJoints;
};

DynamicsReport dynamics(const data::PoseSequence& seq, Scope scope);

// Mean over frames of the perimeter of the axis-aligned box around all
// joints.
double bb_perimeter(const data::PoseSequence& seq);

// How the distance to the target splits between the source and the model:
// share_x = |metric_x - metric_target| normalized so the two shares sum to
// exactly 100. A lower model_share means the model sits closer to the target
// style than the source does. When both distances vanish the split is
// reported as 50/50 with the degenerate flag raised.
struct DistShares {
  double source_share = 50;
  double model_share = 50;
  bool degenerate = false;
};

DistShares dist_shares(double metric_source, double metric_model,
                       double metric_target);

// Fraction of keypoints whose Euclidean error stays within alpha times the
// larger side of the ground-truth frame's bounding box, averaged over frames,
// keypoints, and alpha in {0.1, 0.2}. A degenerate ground-truth box gives
// that frame threshold zero, so only exact matches count there.
double pck(const data::PoseSequence& pred, const data::PoseSequence& gt);

// Mean absolute elementwise difference.
double l1(const data::PoseSequence& pred, const data::PoseSequence& gt);

// Style-transfer report card for one (source, generated, target) triple:
// distance shares for the seven dynamics statistics plus pose accuracy of
// the generated sequence against the target.
struct TripleReport {
  DistShares velocity, acceleration, jerk;
  DistShares wrist_velocity, wrist_acceleration, wrist_jerk;
  DistShares bb_perimeter;
  double pck = 0;
  double l1 = 0;
};

TripleReport evaluate_triple(const data::PoseSequence& source,
                             const data::PoseSequence& generated,
                             const data::PoseSequence& target);

// Fixed key order, suitable for diffing across runs.
std::string triple_report_to_json(const TripleReport& r);

}  // namespace zsmstm::metrics
