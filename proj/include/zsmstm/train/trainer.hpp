#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "zsmstm/data/types.hpp"
#include "zsmstm/model/networks.hpp"
#include "zsmstm/train/losses.hpp"

namespace zsmstm::train {

struct TrainConfig {
  int batch_size = 24;
  int epochs = 200;
  double beta1 = 0.95;
  double beta2 = 0.999;
  double base_lr = 1e-5;
  int64_t warmup_steps = 20000;
  double lambda_step = 0.01;
  double lambda_cap = 1.0;
  uint64_t seed = 1;
  model::Ablate ablate;
  std::string profile = "desk";
  std::string rec_loss = "norm";  // or "mse"
  int window_segments = 1;
  int64_t max_steps = 0;          // 0: run the full epoch budget
  int checkpoint_every = 1;       // epochs between rolling checkpoint writes
  std::filesystem::path checkpoint_dir;  // empty: keep everything in memory
  std::filesystem::path log_path;        // empty: in-memory log only
  bool verify_isolation = true;

  void validate() const;

  // Short schedule that actually moves at desk scale; the published schedule
  // (1e-5 with 20k warmup) barely leaves zero within a smoke budget.
  static TrainConfig desk_smoke();
};

struct TrainLogRow {
  int64_t step = 0;
  double lambda = 0;
  double lr = 0;
  double l_rec = 0;
  double l_dis = 0;
  double l_adv = 0;
  double l_total = 0;
  double grad_norm_gen = 0;
  double grad_norm_dis = 0;
};

inline constexpr const char* kTrainLogHeader =
    "step,lambda,lr,l_rec,l_dis,l_adv,l_total,grad_norm_gen,grad_norm_dis";

struct TrainResult {
  std::vector<TrainLogRow> log;
  int64_t steps = 0;
  int64_t isolation_checks = 0;
  int64_t isolation_violations = 0;
  uint64_t param_hash = 0;
  std::filesystem::path final_checkpoint;
};

// Self-describing checkpoint header: model config, normalization statistics,
// ablation flags, and the corpus frame rate.
std::string checkpoint_header(const model::ModelConfig& cfg,
                              const data::NormStats& norm,
                              const model::Ablate& ablate, double fps);

// Alternating fader optimization of the model on the dataset's train split.
// The dataset must already be normalized; the model defines the profile.
TrainResult train(model::ZsMstm<float>& m, const data::Dataset& ds,
                  const TrainConfig& tc);

}  // namespace zsmstm::train
