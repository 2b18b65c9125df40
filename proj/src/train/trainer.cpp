// Alternating generator/discriminator training with the fader objective.

#include "zsmstm/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "json.hpp"
#include "zsmstm/data/dataset.hpp"
#include "zsmstm/nn/checkpoint.hpp"
#include "zsmstm/nn/optim.hpp"

namespace zsmstm::train {

using model::SegmentInput;
using model::ZsMstm;
using nn::Graph;
using nn::Param;
using nn::Tensor;
using nn::Var;

void TrainConfig::validate() const {
  if (batch_size < 1) throw_data("train::BadConfig", "batch_size must be >= 1");
  if (epochs < 1 && max_steps < 1)
    throw_data("train::BadConfig", "no step budget: epochs and max_steps unset");
  if (lambda_cap < 0) throw_data("train::BadConfig", "lambda_cap must be >= 0");
  if (lambda_step < 0) throw_data("train::BadConfig", "lambda_step must be >= 0");
  if (base_lr <= 0) throw_data("train::BadConfig", "base_lr must be positive");
  if (window_segments < 1)
    throw_data("train::BadConfig", "window_segments must be >= 1");
  if (rec_loss != "norm" && rec_loss != "mse")
    throw_data("train::BadConfig", "rec_loss must be 'norm' or 'mse'");
  if (checkpoint_every < 1)
    throw_data("train::BadConfig", "checkpoint_every must be >= 1");
}

TrainConfig TrainConfig::desk_smoke() {
  TrainConfig tc;
  tc.base_lr = 2e-3;
  tc.warmup_steps = 100;
  return tc;
}

std::string checkpoint_header(const model::ModelConfig& cfg,
                              const data::NormStats& norm,
                              const model::Ablate& ablate, double fps) {
  nlohmann::json j;
  j["model"] = nlohmann::json::parse(cfg.to_json());
  j["norm"] = nlohmann::json::parse(data::norm_stats_to_json(norm));
  j["ablate"] = ablate.to_string();
  j["fps"] = fps;
  return j.dump();
}

namespace {

struct WindowRef {
  int clip = 0;
  int first_seg = 0;
};

uint64_t group_value_hash(const std::vector<Param<float>*>& group) {
  uint64_t h = 1469598103934665603ull;
  for (const Param<float>* p : group) {
    h ^= hash_bytes(p->value.data.data(), p->value.size() * sizeof(float));
    h *= 1099511628211ull;
  }
  return h;
}

// Moment tensors in parameter-store order, stitched from the two optimizer
// groups. Group membership is by name prefix, so every parameter is covered.
std::vector<Tensor<float>> stitch_moments(
    const nn::ParamStore<float>& ps, const std::vector<Param<float>*>& gen,
    const std::vector<Tensor<float>>& gen_m,
    const std::vector<Param<float>*>& dis,
    const std::vector<Tensor<float>>& dis_m) {
  std::unordered_map<const Param<float>*, const Tensor<float>*> by_param;
  for (std::size_t i = 0; i < gen.size(); ++i) by_param[gen[i]] = &gen_m[i];
  for (std::size_t i = 0; i < dis.size(); ++i) by_param[dis[i]] = &dis_m[i];
  std::vector<Tensor<float>> out;
  out.reserve(ps.count());
  for (std::size_t i = 0; i < ps.count(); ++i) {
    auto it = by_param.find(&ps.at(i));
    if (it == by_param.end())
      throw_data("train::BadConfig",
                 "parameter outside both optimizer groups: " + ps.at(i).name);
    out.push_back(*it->second);
  }
  return out;
}

class CsvLog {
 public:
  explicit CsvLog(const std::filesystem::path& path) {
    if (path.empty()) return;
    os_.open(path, std::ios::trunc);
    if (!os_) throw_data("train::LogWriteFailed", "cannot open " + path.string());
    os_ << kTrainLogHeader << "\n";
  }

  void append(const TrainLogRow& r) {
    if (!os_.is_open()) return;
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  static_cast<long long>(r.step), r.lambda, r.lr, r.l_rec,
                  r.l_dis, r.l_adv, r.l_total, r.grad_norm_gen,
                  r.grad_norm_dis);
    os_ << buf << "\n";
  }

  void flush() {
    if (os_.is_open()) os_.flush();
  }

 private:
  std::ofstream os_;
};

}  // namespace

TrainResult train(ZsMstm<float>& m, const data::Dataset& ds,
                  const TrainConfig& tc) {
  tc.validate();
  if (!ds.norm.fitted)
    throw_data("train::UnnormalizedDataset",
               "dataset must be normalized before training");

  // Model-ready inputs and teacher blocks, cached once per run.
  std::vector<int> train_clips;
  for (int ci = 0; ci < static_cast<int>(ds.clips.size()); ++ci)
    if (ds.clips[ci].split == data::Split::Train) train_clips.push_back(ci);
  if (train_clips.empty())
    throw_data("train::UnnormalizedDataset", "train split is empty");

  for (int ci : train_clips) {
    const data::Clip& clip = ds.clips[ci];
    for (std::size_t s = 0; s < clip.segments.size(); ++s) {
      const data::Segment& seg = clip.segments[s];
      if (static_cast<int>(seg.text.size()) != m.cfg.text_input_dim ||
          seg.mel.rows != m.cfg.mel_bins || seg.mel.cols != m.cfg.mel_frames ||
          !seg.has_poses() || seg.poses.rows != m.cfg.seg_len ||
          seg.poses.cols != m.cfg.pose_dim)
        throw_data("train::IncompatibleConfig",
                   "clip " + clip.id + " segment " + std::to_string(s) +
                       " does not match the " + m.cfg.profile +
                       " profile input shapes");
    }
  }

  std::unordered_map<int, std::vector<SegmentInput<float>>> clip_cache;
  for (int ci : train_clips)
    clip_cache.emplace(ci, model::clip_inputs<float>(ds.clips[ci]));

  std::vector<WindowRef> windows;
  for (int ci : train_clips) {
    const int segs = static_cast<int>(ds.clips[ci].segments.size());
    for (int s = 0; s + tc.window_segments <= segs; s += tc.window_segments)
      windows.push_back({ci, s});
  }
  if (windows.empty())
    throw_data("train::UnnormalizedDataset",
               "no training windows at this window size");

  const int frames_per_window = tc.window_segments * m.cfg.seg_len;
  auto window_inputs = [&](const WindowRef& w) {
    const auto& all = clip_cache.at(w.clip);
    return std::vector<SegmentInput<float>>(
        all.begin() + w.first_seg,
        all.begin() + w.first_seg + tc.window_segments);
  };
  auto window_teacher = [&](const WindowRef& w) {
    Tensor<float> t(frames_per_window, m.cfg.pose_dim);
    const auto& all = clip_cache.at(w.clip);
    for (int s = 0; s < tc.window_segments; ++s) {
      const auto& poses = all[w.first_seg + s].poses;
      if (poses.rows != m.cfg.seg_len)
        throw_data("train::ShapeMismatch", "training clip lacks pose data");
      std::copy(poses.data.begin(), poses.data.end(),
                t.data.begin() +
                    static_cast<std::size_t>(s) * poses.data.size());
    }
    return t;
  };
  std::unordered_map<int, std::vector<Tensor<float>>> teacher_cache;
  for (const auto& w : windows) {
    auto& per_clip = teacher_cache[w.clip];
    if (per_clip.empty())
      per_clip.resize(clip_cache.at(w.clip).size());
    per_clip[w.first_seg] = window_teacher(w);
  }

  auto gen_group = m.generator_side_params();
  auto dis_group = m.discriminator_params();
  nn::AdamState<float> gen_state, dis_state;
  gen_state.beta1 = dis_state.beta1 = tc.beta1;
  gen_state.beta2 = dis_state.beta2 = tc.beta2;
  gen_state.init(gen_group);
  dis_state.init(dis_group);
  nn::LrSchedule sched{tc.base_lr, tc.warmup_steps};
  StyleErrorNormalizer normalizer;

  const int64_t steps_per_epoch =
      (static_cast<int64_t>(windows.size()) + tc.batch_size - 1) /
      tc.batch_size;
  int64_t budget = static_cast<int64_t>(tc.epochs) * steps_per_epoch;
  if (tc.max_steps > 0) budget = std::min(budget, tc.max_steps);

  const std::string header =
      checkpoint_header(m.cfg, ds.norm, tc.ablate, ds.fps);
  auto write_ckpt = [&](const std::filesystem::path& path, uint64_t step) {
    save_checkpoint(path, header, m.params,
                    stitch_moments(m.params, gen_group, gen_state.m, dis_group,
                                   dis_state.m),
                    stitch_moments(m.params, gen_group, gen_state.v, dis_group,
                                   dis_state.v),
                    step);
  };
  if (!tc.checkpoint_dir.empty())
    std::filesystem::create_directories(tc.checkpoint_dir);

  TrainResult result;
  result.log.reserve(static_cast<std::size_t>(budget));
  CsvLog csv(tc.log_path);
  Rng order_rng(derive_seed(tc.seed, 301));
  int64_t step = 0;

  for (int epoch = 0; step < budget; ++epoch) {
    std::vector<WindowRef> order = windows;
    order_rng.shuffle(order.begin(), order.end());
    for (std::size_t base = 0; base < order.size() && step < budget;
         base += static_cast<std::size_t>(tc.batch_size), ++step) {
      const std::size_t take =
          std::min(static_cast<std::size_t>(tc.batch_size),
                   order.size() - base);
      std::vector<WindowRef> batch(order.begin() + base,
                                   order.begin() + base + take);

      m.params.zero_grad();
      Graph<float> g;

      // One style vector per distinct clip; windows of the same clip share it.
      std::unordered_map<int, Var<float>> styles;
      for (const auto& w : batch)
        if (!styles.count(w.clip))
          styles.emplace(w.clip,
                         m.encode_style(g, clip_cache.at(w.clip), tc.ablate));

      // One content matrix row per segment; the style target repeats per row
      // of its window so the two stay aligned for the discriminator.
      std::vector<Var<float>> hc_rows, window_styles, style_rows;
      hc_rows.reserve(batch.size());
      window_styles.reserve(batch.size());
      for (const auto& w : batch) {
        hc_rows.push_back(m.encode_content(g, window_inputs(w)));
        window_styles.push_back(styles.at(w.clip));
        for (int s = 0; s < tc.window_segments; ++s)
          style_rows.push_back(window_styles.back());
      }
      Var<float> h_content =
          hc_rows.size() == 1 ? hc_rows[0] : g.concat_rows(hc_rows);
      Var<float> h_styles =
          style_rows.size() == 1 ? style_rows[0] : g.concat_rows(style_rows);

      // Discriminator step: regression onto detached embeddings.
      Var<float> dis_pred = m.discriminate(g, g.detach(h_content));
      Var<float> dis_err =
          row_norms(g, g.sub(g.detach(h_styles), dis_pred));
      Var<float> l_dis_v = g.mean_all(dis_err);
      const double l_dis = static_cast<double>(l_dis_v.scalar());
      g.backward(l_dis_v);
      const double gnorm_dis = nn::grad_norm(dis_group);
      const double lr = lr_at(step + 1, sched);
      uint64_t gen_before = 0;
      if (tc.verify_isolation) gen_before = group_value_hash(gen_group);
      nn::adam_step(dis_group, dis_state, lr);
      if (tc.verify_isolation) {
        ++result.isolation_checks;
        if (group_value_hash(gen_group) != gen_before)
          ++result.isolation_violations;
      }

      std::vector<double> err_values(static_cast<std::size_t>(dis_err.rows()));
      for (int i = 0; i < dis_err.rows(); ++i)
        err_values[static_cast<std::size_t>(i)] =
            static_cast<double>(dis_err.at(i, 0));
      normalizer.update(err_values);

      // Generator step: reconstruction plus the fader objective against the
      // just-updated, frozen discriminator.
      g.reset_grads();
      std::vector<Var<float>> preds;
      std::vector<Tensor<float>> targets;
      preds.reserve(batch.size());
      targets.reserve(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& w = batch[i];
        const Tensor<float>& teacher = teacher_cache.at(w.clip)[w.first_seg];
        Var<float> hc_i = tc.window_segments == 1
                              ? hc_rows[i]
                              : g.slice_rows(h_content,
                                             static_cast<int>(i) *
                                                 tc.window_segments,
                                             (static_cast<int>(i) + 1) *
                                                 tc.window_segments);
        preds.push_back(m.generate(g, hc_i, window_styles[i], teacher));
        targets.push_back(teacher);
      }
      Var<float> l_rec_v = loss_rec(g, preds, targets, tc.rec_loss);

      g.freeze_leaves = true;
      Var<float> adv_pred = m.discriminate(g, h_content);
      g.freeze_leaves = false;
      Var<float> adv_err = row_norms(g, g.sub(h_styles, adv_pred));
      Var<float> l_adv_v = loss_adv(g, adv_err, normalizer);
      const double lambda = lambda_at(step, tc.lambda_step, tc.lambda_cap);
      Var<float> l_total_v = loss_total(g, l_rec_v, l_adv_v, lambda);

      const double l_rec = static_cast<double>(l_rec_v.scalar());
      const double l_adv = static_cast<double>(l_adv_v.scalar());
      const double l_total = static_cast<double>(l_total_v.scalar());
      if (!std::isfinite(l_rec) || !std::isfinite(l_dis) ||
          !std::isfinite(l_adv) || !std::isfinite(l_total)) {
        std::string where;
        for (const auto& w : batch)
          where += " " + ds.clips[w.clip].id + ":" +
                   std::to_string(w.first_seg);
        throw_numeric("train::NonFiniteLoss",
                      "step " + std::to_string(step) + ", batch windows" +
                          where);
      }

      g.backward(l_total_v);
      const double gnorm_gen = nn::grad_norm(gen_group);
      uint64_t dis_before = 0;
      if (tc.verify_isolation) dis_before = group_value_hash(dis_group);
      nn::adam_step(gen_group, gen_state, lr);
      if (tc.verify_isolation) {
        ++result.isolation_checks;
        if (group_value_hash(dis_group) != dis_before)
          ++result.isolation_violations;
      }

      TrainLogRow row{step,  lambda, lr,      l_rec,     l_dis,
                      l_adv, l_total, gnorm_gen, gnorm_dis};
      result.log.push_back(row);
      csv.append(row);
    }
    if (!tc.checkpoint_dir.empty() && (epoch + 1) % tc.checkpoint_every == 0)
      write_ckpt(tc.checkpoint_dir / "epoch.ckpt",
                 static_cast<uint64_t>(step));
  }

  csv.flush();
  result.steps = step;
  result.param_hash = m.params.value_hash();
  if (!tc.checkpoint_dir.empty()) {
    result.final_checkpoint = tc.checkpoint_dir / "final.ckpt";
    write_ckpt(result.final_checkpoint, static_cast<uint64_t>(step));
  }
  return result;
}

}  // namespace zsmstm::train
