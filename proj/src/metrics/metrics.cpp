// Objective gesture metrics: finite-difference dynamics, bounding boxes,
// distance shares, keypoint accuracy.

#include "zsmstm/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "json.hpp"
#include "zsmstm/common.hpp"

namespace zsmstm::metrics {

namespace {

std::vector<int> scope_joints(Scope scope) {
  if (scope == Scope::WristsOnly)
    return {data::kRightWrist, data::kLeftWrist};
  std::vector<int> all(data::kNumJoints);
  for (int j = 0; j < data::kNumJoints; ++j) all[j] = j;
  return all;
}

void check_same_shape(const data::PoseSequence& a, const data::PoseSequence& b,
                      const char* what) {
  if (a.values.rows != b.values.rows || a.values.cols != b.values.cols)
    throw_data("metrics::ShapeMismatch",
               std::string(what) + ": " + std::to_string(a.values.rows) + "x" +
                   std::to_string(a.values.cols) + " vs " +
                   std::to_string(b.values.rows) + "x" +
                   std::to_string(b.values.cols));
}

nlohmann::ordered_json shares_json(const DistShares& s) {
  nlohmann::ordered_json j;
  j["source_share"] = s.source_share;
  j["model_share"] = s.model_share;
  j["degenerate"] = s.degenerate;
  return j;
}

}  // namespace

DynamicsReport dynamics(const data::PoseSequence& seq, Scope scope) {
  const int frames = seq.frames();
  if (frames < 4)
    throw_data("metrics::TooShort",
               "dynamics need at least 4 frames, got " +
                   std::to_string(frames));
  if (seq.fps <= 0)
    throw_data("metrics::TooShort", "fps must be positive");
  const std::vector<int> joints = scope_joints(scope);

  // Differences taken recursively (first of first, and so on) rather than
  // as weighted stencils: repeated subtraction keeps constant trajectories
  // at exactly zero through all three orders.
  double sums[3] = {0, 0, 0};
  long counts[3] = {0, 0, 0};
  std::vector<double> dx(frames), dy(frames);
  for (int j : joints) {
    for (int t = 0; t < frames; ++t) {
      dx[t] = seq.x(t, j);
      dy[t] = seq.y(t, j);
    }
    int n = frames;
    for (int order = 0; order < 3; ++order) {
      for (int t = 0; t + 1 < n; ++t) {
        dx[t] = dx[t + 1] - dx[t];
        dy[t] = dy[t + 1] - dy[t];
      }
      --n;
      for (int t = 0; t < n; ++t)
        sums[order] += std::sqrt(dx[t] * dx[t] + dy[t] * dy[t]);
      counts[order] += n;
    }
  }

  DynamicsReport r;
  r.scope = scope;
  r.velocity = sums[0] / static_cast<double>(counts[0]) * seq.fps;
  r.acceleration =
      sums[1] / static_cast<double>(counts[1]) * seq.fps * seq.fps;
  r.jerk =
      sums[2] / static_cast<double>(counts[2]) * seq.fps * seq.fps * seq.fps;
  return r;
}

double bb_perimeter(const data::PoseSequence& seq) {
  const int frames = seq.frames();
  if (frames < 1)
    throw_data("metrics::TooShort", "bounding box needs at least one frame");
  double sum = 0;
  for (int t = 0; t < frames; ++t) {
    double min_x = seq.x(t, 0), max_x = min_x;
    double min_y = seq.y(t, 0), max_y = min_y;
    for (int j = 1; j < data::kNumJoints; ++j) {
      min_x = std::min(min_x, seq.x(t, j));
      max_x = std::max(max_x, seq.x(t, j));
      min_y = std::min(min_y, seq.y(t, j));
      max_y = std::max(max_y, seq.y(t, j));
    }
    sum += 2 * ((max_x - min_x) + (max_y - min_y));
  }
  return sum / frames;
}

DistShares dist_shares(double metric_source, double metric_model,
                       double metric_target) {
  const double d_source = std::abs(metric_source - metric_target);
  const double d_model = std::abs(metric_model - metric_target);
  DistShares s;
  if (d_source + d_model == 0) {
    s.degenerate = true;
    return s;
  }
  s.source_share = 100.0 * d_source / (d_source + d_model);
  s.model_share = 100.0 - s.source_share;
  s.degenerate = false;
  return s;
}

double pck(const data::PoseSequence& pred, const data::PoseSequence& gt) {
  check_same_shape(pred, gt, "pck");
  if (gt.frames() < 1)
    throw_data("metrics::TooShort", "pck needs at least one frame");
  static const double alphas[2] = {0.1, 0.2};
  double correct = 0;
  long total = 0;
  for (int t = 0; t < gt.frames(); ++t) {
    double min_x = gt.x(t, 0), max_x = min_x;
    double min_y = gt.y(t, 0), max_y = min_y;
    for (int j = 1; j < data::kNumJoints; ++j) {
      min_x = std::min(min_x, gt.x(t, j));
      max_x = std::max(max_x, gt.x(t, j));
      min_y = std::min(min_y, gt.y(t, j));
      max_y = std::max(max_y, gt.y(t, j));
    }
    const double side = std::max(max_x - min_x, max_y - min_y);
    for (int j = 0; j < data::kNumJoints; ++j) {
      const double dx = pred.x(t, j) - gt.x(t, j);
      const double dy = pred.y(t, j) - gt.y(t, j);
      const double err = std::sqrt(dx * dx + dy * dy);
      for (double alpha : alphas) {
        if (err <= alpha * side) correct += 1;
        ++total;
      }
    }
  }
  return correct / static_cast<double>(total);
}

double l1(const data::PoseSequence& pred, const data::PoseSequence& gt) {
  check_same_shape(pred, gt, "l1");
  if (gt.values.size() == 0)
    throw_data("metrics::TooShort", "l1 needs at least one frame");
  double sum = 0;
  for (std::size_t i = 0; i < gt.values.data.size(); ++i)
    sum += std::abs(pred.values.data[i] - gt.values.data[i]);
  return sum / static_cast<double>(gt.values.data.size());
}

TripleReport evaluate_triple(const data::PoseSequence& source,
                             const data::PoseSequence& generated,
                             const data::PoseSequence& target) {
  TripleReport r;
  const DynamicsReport ds = dynamics(source, Scope::AllJoints);
  const DynamicsReport dg = dynamics(generated, Scope::AllJoints);
  const DynamicsReport dt = dynamics(target, Scope::AllJoints);
  r.velocity = dist_shares(ds.velocity, dg.velocity, dt.velocity);
  r.acceleration =
      dist_shares(ds.acceleration, dg.acceleration, dt.acceleration);
  r.jerk = dist_shares(ds.jerk, dg.jerk, dt.jerk);
  const DynamicsReport ws = dynamics(source, Scope::WristsOnly);
  const DynamicsReport wg = dynamics(generated, Scope::WristsOnly);
  const DynamicsReport wt = dynamics(target, Scope::WristsOnly);
  r.wrist_velocity = dist_shares(ws.velocity, wg.velocity, wt.velocity);
  r.wrist_acceleration =
      dist_shares(ws.acceleration, wg.acceleration, wt.acceleration);
  r.wrist_jerk = dist_shares(ws.jerk, wg.jerk, wt.jerk);
  r.bb_perimeter = dist_shares(bb_perimeter(source), bb_perimeter(generated),
                               bb_perimeter(target));
  r.pck = pck(generated, target);
  r.l1 = l1(generated, target);
  return r;
}

std::string triple_report_to_json(const TripleReport& r) {
  nlohmann::ordered_json j;
  j["velocity"] = shares_json(r.velocity);
  j["acceleration"] = shares_json(r.acceleration);
  j["jerk"] = shares_json(r.jerk);
  j["wrist_velocity"] = shares_json(r.wrist_velocity);
  j["wrist_acceleration"] = shares_json(r.wrist_acceleration);
  j["wrist_jerk"] = shares_json(r.wrist_jerk);
  j["bb_perimeter"] = shares_json(r.bb_perimeter);
  j["pck"] = r.pck;
  j["l1"] = r.l1;
  // Multi-clip callers average raw metrics per set before taking shares;
  // recorded here so downstream readers know the convention.
  j["aggregation"] = "means-before-shares";
  return j.dump(2);
}

}  // namespace zsmstm::metrics
