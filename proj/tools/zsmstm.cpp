// Command-line front end: corpus generation, training, zero-shot transfer,
// evaluation, embedding export, and gradient checking. The fully resolved
// run configuration is echoed to stdout as canonical JSON before anything
// executes; all other chatter goes to stderr.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "zsmstm/common.hpp"
#include "zsmstm/data/dataset.hpp"
#include "zsmstm/data/pose_io.hpp"
#include "zsmstm/data/synthetic.hpp"
#include "zsmstm/metrics/exporters.hpp"
#include "zsmstm/metrics/metrics.hpp"
#include "zsmstm/model/networks.hpp"
#include "zsmstm/nn/grad_check.hpp"
#include "zsmstm/train/trainer.hpp"
#include "zsmstm/train/transfer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace zsmstm;

// ---------------------------------------------------------------------------
// Config files: a TOML subset. `key = value` pairs under [section] headers;
// values are quoted strings, booleans, or numbers; `#` starts a comment.
// Arrays, nested tables, and escape sequences are rejected.

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Toml {
 public:
  static Toml load(const fs::path& path) {
    std::ifstream is(path);
    if (!is)
      throw_usage("cli::MissingConfig", "cannot open " + path.string());
    Toml t;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const std::string where =
          path.string() + ":" + std::to_string(lineno);
      // Strip comments, but not a '#' inside a quoted value.
      bool quoted = false;
      for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) {
          line.resize(i);
          break;
        }
      }
      const std::string s = trim(line);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']' || s.size() < 3)
          throw_usage("cli::BadConfig", where + ": malformed section header");
        section = trim(s.substr(1, s.size() - 2));
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos)
        throw_usage("cli::BadConfig", where + ": expected key = value");
      const std::string key = trim(s.substr(0, eq));
      std::string val = trim(s.substr(eq + 1));
      if (key.empty() || val.empty())
        throw_usage("cli::BadConfig", where + ": empty key or value");
      if (val.front() == '"') {
        if (val.size() < 2 || val.back() != '"' ||
            val.find('"', 1) != val.size() - 1 ||
            val.find('\\') != std::string::npos)
          throw_usage("cli::BadConfig", where + ": unsupported string value");
        val = val.substr(1, val.size() - 2);
      }
      const std::string full = section.empty() ? key : section + "." + key;
      if (t.values_.count(full))
        throw_usage("cli::BadConfig", where + ": duplicate key " + full);
      t.values_[full] = val;
    }
    return t;
  }

  std::optional<std::string> str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> num(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(it->second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != it->second.size())
      throw_usage("cli::BadConfig", key + ": not a number: " + it->second);
    return v;
  }

  std::optional<int64_t> integer(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    size_t used = 0;
    int64_t v = 0;
    try {
      v = std::stoll(it->second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != it->second.size())
      throw_usage("cli::BadConfig", key + ": not an integer: " + it->second);
    return v;
  }

  std::optional<bool> boolean(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw_usage("cli::BadConfig", key + ": not a boolean: " + it->second);
  }

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

template <typename T>
T pick(const std::optional<T>& cli, const std::optional<T>& file, T fallback) {
  if (cli) return *cli;
  if (file) return *file;
  return fallback;
}

fs::path manifest_of(const std::string& data) {
  fs::path p(data);
  if (fs::is_directory(p)) return p / "manifest.json";
  return p;
}

void echo_config(const json& j) { std::cout << j.dump(2) << "\n"; }

// ---------------------------------------------------------------------------
// gen-data

struct GenArgs {
  std::optional<int> seen, unseen, clips, segments, mel_frames;
  std::optional<uint64_t> seed;
  std::optional<double> fps;
  std::string out;
};

int run_gen_data(const GenArgs& a) {
  data::SynthConfig sc;
  sc.n_seen = a.seen.value_or(sc.n_seen);
  sc.n_unseen = a.unseen.value_or(sc.n_unseen);
  sc.clips_per_speaker = a.clips.value_or(sc.clips_per_speaker);
  sc.segments_per_clip = a.segments.value_or(sc.segments_per_clip);
  sc.seed = a.seed.value_or(sc.seed);
  sc.fps = a.fps.value_or(sc.fps);
  sc.mel_frames = a.mel_frames.value_or(sc.mel_frames);

  echo_config({{"command", "gen-data"},
               {"paths", {{"out", a.out}}},
               {"synth",
                {{"seen", sc.n_seen},
                 {"unseen", sc.n_unseen},
                 {"clips_per_speaker", sc.clips_per_speaker},
                 {"segments_per_clip", sc.segments_per_clip},
                 {"seed", sc.seed},
                 {"fps", sc.fps},
                 {"mel_frames", sc.mel_frames}}}});

  const data::Dataset ds = data::generate_synthetic(sc);
  data::save_dataset(ds, a.out);
  std::cerr << "wrote " << ds.clips.size() << " clips for "
            << ds.speakers.size() << " speakers to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::optional<std::string> data, out, log, profile, ablate, rec_loss;
  std::string config;
  std::optional<int> batch, epochs, window_segments, checkpoint_every;
  std::optional<int64_t> max_steps, warmup;
  std::optional<double> base_lr, lambda_step, lambda_cap;
  std::optional<uint64_t> seed;
  bool smoke = false;
};

const std::vector<std::string> kTrainKeys = {
    "train.batch_size",   "train.epochs",        "train.max_steps",
    "train.base_lr",      "train.warmup_steps",  "train.lambda_step",
    "train.lambda_cap",   "train.seed",          "train.ablate",
    "train.rec_loss",     "train.window_segments",
    "train.checkpoint_every", "train.beta1",     "train.beta2",
    "train.verify_isolation", "train.smoke",
    "paths.data",         "paths.out",           "paths.log"};

void validate_config_keys(const Toml& toml, const model::ModelConfig& ref) {
  const json fields = json::parse(ref.to_json());
  for (const auto& [key, value] : toml.raw()) {
    (void)value;
    if (key.rfind("model.", 0) == 0) {
      const std::string field = key.substr(6);
      if (!fields.contains(field))
        throw_usage("cli::UnknownConfigKey", key);
      continue;
    }
    if (std::find(kTrainKeys.begin(), kTrainKeys.end(), key) ==
        kTrainKeys.end())
      throw_usage("cli::UnknownConfigKey", key);
  }
}

model::ModelConfig resolve_model(const Toml& toml, const std::string& profile) {
  model::ModelConfig cfg = model::ModelConfig::by_name(profile);
  json j = json::parse(cfg.to_json());
  bool touched = false;
  for (const auto& [key, value] : toml.raw()) {
    (void)value;
    if (key.rfind("model.", 0) != 0) continue;
    const std::string field = key.substr(6);
    if (field == "profile") continue;
    j[field] = *toml.integer(key);
    touched = true;
  }
  if (touched) cfg = model::ModelConfig::from_json(j.dump());
  return cfg;
}

int run_train(const TrainArgs& a) {
  const Toml toml = a.config.empty() ? Toml{} : Toml::load(a.config);
  validate_config_keys(toml, model::ModelConfig{});

  const bool smoke =
      a.smoke || toml.boolean("train.smoke").value_or(false);
  train::TrainConfig tc =
      smoke ? train::TrainConfig::desk_smoke() : train::TrainConfig{};
  tc.profile = pick(a.profile, toml.str("model.profile"), tc.profile);
  tc.batch_size = static_cast<int>(pick<int64_t>(
      a.batch, toml.integer("train.batch_size"), tc.batch_size));
  tc.epochs = static_cast<int>(
      pick<int64_t>(a.epochs, toml.integer("train.epochs"), tc.epochs));
  tc.max_steps =
      pick<int64_t>(a.max_steps, toml.integer("train.max_steps"), tc.max_steps);
  tc.base_lr = pick(a.base_lr, toml.num("train.base_lr"), tc.base_lr);
  tc.warmup_steps = pick<int64_t>(a.warmup, toml.integer("train.warmup_steps"),
                                  tc.warmup_steps);
  tc.lambda_step =
      pick(a.lambda_step, toml.num("train.lambda_step"), tc.lambda_step);
  tc.lambda_cap =
      pick(a.lambda_cap, toml.num("train.lambda_cap"), tc.lambda_cap);
  tc.seed = pick<uint64_t>(
      a.seed,
      toml.integer("train.seed")
          ? std::optional<uint64_t>(static_cast<uint64_t>(
                *toml.integer("train.seed")))
          : std::nullopt,
      tc.seed);
  tc.rec_loss = pick(a.rec_loss, toml.str("train.rec_loss"), tc.rec_loss);
  tc.window_segments = static_cast<int>(
      pick<int64_t>(a.window_segments, toml.integer("train.window_segments"),
                    tc.window_segments));
  tc.checkpoint_every = static_cast<int>(
      pick<int64_t>(a.checkpoint_every, toml.integer("train.checkpoint_every"),
                    tc.checkpoint_every));
  if (auto b1 = toml.num("train.beta1")) tc.beta1 = *b1;
  if (auto b2 = toml.num("train.beta2")) tc.beta2 = *b2;
  if (auto vi = toml.boolean("train.verify_isolation"))
    tc.verify_isolation = *vi;
  tc.ablate = model::Ablate::parse(
      pick(a.ablate, toml.str("train.ablate"), std::string()));

  const std::string data = pick(a.data, toml.str("paths.data"), std::string());
  if (data.empty())
    throw_usage("cli::MissingData", "no dataset given (--data or paths.data)");
  const std::string out = pick(a.out, toml.str("paths.out"), std::string("out"));
  const std::string log =
      pick(a.log, toml.str("paths.log"), (fs::path(out) / "train_log.csv").string());
  tc.checkpoint_dir = out;
  tc.log_path = log;
  tc.validate();

  const model::ModelConfig cfg = resolve_model(toml, tc.profile);

  echo_config({{"command", "train"},
               {"model", json::parse(cfg.to_json())},
               {"paths", {{"config", a.config}, {"data", data}, {"log", log}, {"out", out}}},
               {"train",
                {{"ablate", tc.ablate.to_string()},
                 {"base_lr", tc.base_lr},
                 {"batch_size", tc.batch_size},
                 {"beta1", tc.beta1},
                 {"beta2", tc.beta2},
                 {"checkpoint_every", tc.checkpoint_every},
                 {"epochs", tc.epochs},
                 {"lambda_cap", tc.lambda_cap},
                 {"lambda_step", tc.lambda_step},
                 {"max_steps", tc.max_steps},
                 {"rec_loss", tc.rec_loss},
                 {"seed", tc.seed},
                 {"verify_isolation", tc.verify_isolation},
                 {"warmup_steps", tc.warmup_steps},
                 {"window_segments", tc.window_segments}}}});

  data::Dataset ds = data::load_dataset(manifest_of(data));
  data::fit_and_normalize(ds);
  fs::create_directories(out);

  model::ZsMstm<float> m(cfg, tc.seed);
  const train::TrainResult r = train::train(m, ds, tc);
  std::cerr << "trained " << r.steps << " steps";
  if (!r.log.empty()) std::cerr << "; final l_rec " << r.log.back().l_rec;
  std::cerr << "\ncheckpoint: " << r.final_checkpoint.string()
            << "\nlog: " << log << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// transfer

struct TransferArgs {
  std::string data, checkpoint, source, out, render;
  std::vector<std::string> targets;
};

int run_transfer(const TransferArgs& a) {
  echo_config({{"command", "transfer"},
               {"paths",
                {{"checkpoint", a.checkpoint},
                 {"data", a.data},
                 {"out", a.out},
                 {"render", a.render}}},
               {"source", a.source},
               {"targets", a.targets}});

  const train::CheckpointBundle bundle = train::load_bundle(a.checkpoint);
  const data::Dataset ds = data::load_dataset(manifest_of(a.data));
  const data::Clip& source = data::find_clip(ds, a.source);
  std::vector<const data::Clip*> targets;
  for (const std::string& id : a.targets)
    targets.push_back(&data::find_clip(ds, id));

  const data::PoseSequence seq = train::transfer(bundle, source, targets);
  data::save_pose_jsonl(seq, a.out);
  std::cerr << "wrote " << seq.frames() << " frames to " << a.out << "\n";
  if (!a.render.empty()) {
    const fs::path manifest = metrics::export_animation(seq, a.render);
    std::cerr << "rendered frames; manifest: " << manifest.string() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string data, source, target, generated;
  std::string out = "triple_report.json";
};

int run_eval(const EvalArgs& a) {
  echo_config({{"command", "eval"},
               {"paths",
                {{"data", a.data}, {"generated", a.generated}, {"out", a.out}}},
               {"source", a.source},
               {"target", a.target}});

  const data::Dataset ds = data::load_dataset(manifest_of(a.data));
  const data::PoseSequence source =
      data::clip_pose_sequence(data::find_clip(ds, a.source), ds.fps);
  const data::PoseSequence target =
      data::clip_pose_sequence(data::find_clip(ds, a.target), ds.fps);
  const data::PoseSequence generated = data::load_pose_jsonl(a.generated);

  const metrics::TripleReport report =
      metrics::evaluate_triple(source, generated, target);
  const std::string text = metrics::triple_report_to_json(report);
  std::ofstream os(a.out);
  if (!os || !(os << text << "\n"))
    throw Error(ErrorKind::Io, "cli::IoError", "cannot write " + a.out);
  std::cerr << "report: " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// export-embeddings

struct ExportArgs {
  std::string data, checkpoint, out;
};

int run_export_embeddings(const ExportArgs& a) {
  echo_config({{"command", "export-embeddings"},
               {"paths",
                {{"checkpoint", a.checkpoint},
                 {"data", a.data},
                 {"out", a.out}}}});

  const train::CheckpointBundle bundle = train::load_bundle(a.checkpoint);
  const data::Dataset ds = data::load_dataset(manifest_of(a.data));
  metrics::write_embeddings_csv(bundle, ds, a.out);
  std::cerr << "embeddings: " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// grad-check

struct GradArgs {
  std::optional<std::string> profile;
  std::optional<int> seeds;
  std::optional<int64_t> samples;
  std::optional<double> eps;
};

template <typename T>
nn::Tensor<T> random_tensor(int rows, int cols, Rng& rng, double scale = 0.5) {
  nn::Tensor<T> t(rows, cols);
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(-scale, scale));
  return t;
}

int run_grad_check(const GradArgs& a) {
  const std::string profile = a.profile.value_or("desk");
  const int seeds = a.seeds.value_or(1);
  // Checking every element of a desk-width model needs two forward passes
  // per element; sample a few evenly spaced elements per tensor instead.
  // 0 means exhaustive.
  const auto samples = static_cast<size_t>(
      a.samples.value_or(profile == "micro" ? 0 : 3));
  const double eps = a.eps.value_or(1e-4);
  // Elements this bad at the base step get re-measured at smaller steps to
  // rule out relu-kink finite-difference artifacts.
  constexpr double kRefineBelow = 1e-5;

  echo_config({{"command", "grad-check"},
               {"eps", eps},
               {"profile", profile},
               {"samples", samples},
               {"seeds", seeds}});

  const model::ModelConfig cfg = model::ModelConfig::by_name(profile);
  double worst = 0;
  const auto note = [&](const std::string& name, double err) {
    std::cerr << name << ": max rel err " << err << "\n";
    worst = std::max(worst, err);
  };
  for (int seed = 1; seed <= seeds; ++seed) {
    model::ZsMstm<double> m(cfg, static_cast<uint64_t>(seed));
    Rng rng(derive_seed(static_cast<uint64_t>(seed), 900));
    std::vector<model::SegmentInput<double>> window;
    for (int s = 0; s < 2; ++s) {
      model::SegmentInput<double> seg;
      seg.text = random_tensor<double>(1, cfg.text_input_dim, rng);
      seg.mel = random_tensor<double>(cfg.mel_bins, cfg.mel_frames, rng);
      seg.poses = random_tensor<double>(cfg.seg_len, cfg.pose_dim, rng);
      window.push_back(std::move(seg));
    }
    {
      const auto probe = random_tensor<double>(2, cfg.d_att, rng, 1.0);
      note("content encoder",
           nn::grad_check<double>(
               m.params.group("content."),
               [&](nn::Graph<double>& g) {
                 return g.mean_all(
                     g.mul(m.encode_content(g, window), g.input(probe)));
               },
               eps, samples, kRefineBelow));
    }
    {
      const auto probe = random_tensor<double>(1, cfg.h_style_dim(), rng, 1.0);
      note("style encoder",
           nn::grad_check<double>(
               m.params.group("style."),
               [&](nn::Graph<double>& g) {
                 return g.mean_all(
                     g.mul(m.encode_style(g, window), g.input(probe)));
               },
               eps, samples, kRefineBelow));
    }
    {
      const auto hc = random_tensor<double>(1, cfg.d_att, rng);
      const auto hs = random_tensor<double>(1, cfg.h_style_dim(), rng);
      const auto teacher = random_tensor<double>(cfg.seg_len, cfg.pose_dim, rng);
      const auto probe =
          random_tensor<double>(cfg.seg_len, cfg.pose_dim, rng, 1.0);
      note("generator",
           nn::grad_check<double>(
               m.params.group("gen."),
               [&](nn::Graph<double>& g) {
                 nn::Var<double> out =
                     m.generate(g, g.input(hc), g.input(hs), teacher);
                 return g.mean_all(g.mul(out, g.input(probe)));
               },
               eps, samples, kRefineBelow));
    }
    {
      const auto x = random_tensor<double>(2, cfg.d_att, rng);
      const auto probe = random_tensor<double>(2, cfg.h_style_dim(), rng, 1.0);
      note("discriminator",
           nn::grad_check<double>(
               m.params.group("dis."),
               [&](nn::Graph<double>& g) {
                 return g.mean_all(
                     g.mul(m.discriminate(g, g.input(x)), g.input(probe)));
               },
               eps, samples, kRefineBelow));
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", worst);
  std::cout << "max relative error: " << buf << "\n";
  if (!(worst < 1e-4))
    throw_numeric("cli::GradCheckFailed",
                  "max relative error " + std::string(buf) + " >= 1e-4");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zero-shot multimodal style transfer for gesture synthesis"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* cg = app.add_subcommand("gen-data", "generate a synthetic corpus");
  cg->add_option("--seen", gen.seen, "speakers in the training pool");
  cg->add_option("--unseen", gen.unseen, "held-out zero-shot speakers");
  cg->add_option("--clips", gen.clips, "clips per speaker");
  cg->add_option("--segments", gen.segments, "segments per clip");
  cg->add_option("--seed", gen.seed, "corpus seed");
  cg->add_option("--fps", gen.fps, "frame rate");
  cg->add_option("--mel-frames", gen.mel_frames, "mel frames per segment");
  cg->add_option("-o,--out", gen.out, "output directory")->required();

  TrainArgs tr;
  CLI::App* ct = app.add_subcommand("train", "train on a corpus");
  ct->add_option("--data", tr.data, "corpus directory or manifest");
  ct->add_option("-o,--out", tr.out, "checkpoint/log directory");
  ct->add_option("--config", tr.config, "TOML config file");
  ct->add_option("--log", tr.log, "training log CSV path");
  ct->add_option("--profile", tr.profile, "model profile (paper|desk|micro)");
  ct->add_option("--seed", tr.seed, "training seed");
  ct->add_option("--epochs", tr.epochs, "epoch budget");
  ct->add_option("--max-steps", tr.max_steps, "hard step cap (0: epochs only)");
  ct->add_option("--batch-size", tr.batch, "windows per batch");
  ct->add_option("--base-lr", tr.base_lr, "peak learning rate");
  ct->add_option("--warmup-steps", tr.warmup, "linear warmup length");
  ct->add_option("--lambda-step", tr.lambda_step, "fader weight ramp per step");
  ct->add_option("--lambda-cap", tr.lambda_cap, "fader weight ceiling");
  ct->add_option("--ablate", tr.ablate, "zero modalities: text,audio,pose");
  ct->add_option("--rec-loss", tr.rec_loss, "reconstruction loss (norm|mse)");
  ct->add_option("--window-segments", tr.window_segments,
                 "segments per training window");
  ct->add_option("--checkpoint-every", tr.checkpoint_every,
                 "epochs between rolling checkpoints");
  ct->add_flag("--smoke", tr.smoke, "short desk-scale schedule defaults");

  TransferArgs tf;
  CLI::App* cx = app.add_subcommand("transfer", "restyle a source clip");
  cx->add_option("--data", tf.data, "corpus directory or manifest")->required();
  cx->add_option("--checkpoint", tf.checkpoint, "trained checkpoint")
      ->required();
  cx->add_option("--source", tf.source, "content clip id")->required();
  cx->add_option("--target", tf.targets, "style clip id (repeatable)")
      ->required()
      ->delimiter(',');
  cx->add_option("-o,--out", tf.out, "pose JSONL output path")->required();
  cx->add_option("--render", tf.render, "also render SVG frames here");

  EvalArgs ev;
  CLI::App* ce = app.add_subcommand("eval", "score a generated sequence");
  ce->add_option("--data", ev.data, "corpus directory or manifest")->required();
  ce->add_option("--source", ev.source, "source clip id")->required();
  ce->add_option("--target", ev.target, "target clip id")->required();
  ce->add_option("--generated", ev.generated, "generated pose JSONL")
      ->required();
  ce->add_option("-o,--out", ev.out, "report JSON path");

  ExportArgs ex;
  CLI::App* cb =
      app.add_subcommand("export-embeddings", "dump per-clip embeddings");
  cb->add_option("--data", ex.data, "corpus directory or manifest")->required();
  cb->add_option("--checkpoint", ex.checkpoint, "trained checkpoint")
      ->required();
  cb->add_option("-o,--out", ex.out, "CSV output path")->required();

  GradArgs gc;
  CLI::App* cc =
      app.add_subcommand("grad-check", "finite-difference gradient audit");
  cc->add_option("--profile", gc.profile, "model profile (default desk)");
  cc->add_option("--seeds", gc.seeds, "number of seeds");
  cc->add_option("--samples", gc.samples,
                 "elements checked per tensor (0: all)");
  cc->add_option("--eps", gc.eps, "finite-difference step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: cli::Usage: " << e.what() << "\n";
    return 1;
  }

  try {
    if (cg->parsed()) return run_gen_data(gen);
    if (ct->parsed()) return run_train(tr);
    if (cx->parsed()) return run_transfer(tf);
    if (ce->parsed()) return run_eval(ev);
    if (cb->parsed()) return run_export_embeddings(ex);
    if (cc->parsed()) return run_grad_check(gc);
    std::cerr << "error: cli::Usage: no subcommand\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: cli::Internal: " << e.what() << "\n";
    return 3;
  }
}
