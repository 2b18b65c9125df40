#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "zsmstm/data/dataset.hpp"
#include "zsmstm/data/synthetic.hpp"

using namespace zsmstm;
using namespace zsmstm::data;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("zsmstm_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool segments_equal(const Segment& a, const Segment& b) {
  return a.text == b.text && a.mel.data == b.mel.data &&
         a.poses.data == b.poses.data;
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
  if (a.fps != b.fps || a.clips.size() != b.clips.size()) return false;
  for (std::size_t i = 0; i < a.clips.size(); ++i) {
    const Clip& ca = a.clips[i];
    const Clip& cb = b.clips[i];
    if (ca.speaker_id != cb.speaker_id || ca.split != cb.split ||
        ca.segments.size() != cb.segments.size())
      return false;
    for (std::size_t s = 0; s < ca.segments.size(); ++s)
      if (!segments_equal(ca.segments[s], cb.segments[s])) return false;
  }
  return true;
}

// Frame-to-frame wrist speed without fps scaling; scale cancels in R².
double mean_wrist_speed(const Clip& clip) {
  double total = 0;
  std::size_t n = 0;
  for (const auto& seg : clip.segments) {
    for (int t = 0; t + 1 < seg.poses.rows; ++t) {
      for (int wrist : {kRightWrist, kLeftWrist}) {
        const double dx =
            seg.poses.at(t + 1, 2 * wrist) - seg.poses.at(t, 2 * wrist);
        const double dy = seg.poses.at(t + 1, 2 * wrist + 1) -
                          seg.poses.at(t, 2 * wrist + 1);
        total += std::sqrt(dx * dx + dy * dy);
        ++n;
      }
    }
  }
  return total / static_cast<double>(n);
}

double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  const double b = (n * sxy - sx * sy) / denom;
  const double a = (sy - b * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (a + b * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  return 1.0 - ss_res / ss_tot;
}

}  // namespace

TEST_CASE("synthetic corpus counts follow the config") {
  SynthConfig cfg;
  cfg.n_seen = 6;
  cfg.n_unseen = 2;
  cfg.clips_per_speaker = 4;
  cfg.segments_per_clip = 3;
  const Dataset ds = generate_synthetic(cfg);
  CHECK(ds.speakers.size() == 8);
  CHECK(ds.clips.size() == 32);
  std::size_t segments = 0;
  for (const auto& c : ds.clips) segments += c.segments.size();
  CHECK(segments == 96);
  for (const auto& c : ds.clips) {
    CHECK(c.segments.size() == 3);
    for (const auto& s : c.segments) {
      CHECK(s.text.size() == 768);
      CHECK(s.mel.rows == 128);
      CHECK(s.poses.rows == 64);
      CHECK(s.poses.cols == 22);
    }
  }
}

TEST_CASE("same seed generates bitwise identical corpora") {
  SynthConfig cfg;
  cfg.seed = 7;
  cfg.n_seen = 3;
  cfg.n_unseen = 1;
  cfg.clips_per_speaker = 2;
  cfg.segments_per_clip = 2;
  CHECK(datasets_equal(generate_synthetic(cfg), generate_synthetic(cfg)));
}

TEST_CASE("seen and unseen speakers partition the roster and its clips") {
  SynthConfig cfg;
  cfg.n_seen = 4;
  cfg.n_unseen = 2;
  const Dataset ds = generate_synthetic(cfg);
  for (const auto& clip : ds.clips) {
    const SpeakerInfo* sp = ds.find_speaker(clip.speaker_id);
    REQUIRE(sp != nullptr);
    if (!sp->seen) CHECK(clip.split == Split::Test);
  }
  // Seen speakers contribute to every split with four clips each.
  int train = 0, val = 0, test = 0;
  for (const auto& clip : ds.clips) {
    if (!ds.find_speaker(clip.speaker_id)->seen) continue;
    if (clip.split == Split::Train) ++train;
    if (clip.split == Split::Val) ++val;
    if (clip.split == Split::Test) ++test;
  }
  CHECK(train == 8);
  CHECK(val == 4);
  CHECK(test == 4);
}

TEST_CASE("wrist displacement is exactly linear in style amplitude") {
  const SynthBasis basis = make_basis(99);
  SyntheticStyle s1 = sample_style(99, 0);
  SyntheticStyle s2 = s1;
  s1.amplitude = 0.6;
  s2.amplitude = 1.8;
  std::array<double, kContentDim> c{0.4, -1.2, 2.0, 0.1, -0.7, 1.5, -2.2, 0.9};
  const auto p1 = render_poses(s1, c, basis);
  const auto p2 = render_poses(s2, c, basis);
  const double want_ratio = s2.amplitude / s1.amplitude;
  for (int t = 0; t < p1.rows; ++t) {
    for (int j = 0; j < p1.cols; ++j) {
      const double d1 = p1.at(t, j) - s1.base_posture[j];
      const double d2 = p2.at(t, j) - s2.base_posture[j];
      if (std::abs(d1) < 1e-12) {
        CHECK(std::abs(d2) < 1e-9);
      } else {
        CHECK(d2 / d1 == doctest::Approx(want_ratio).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("amplitude is recoverable from wrist dynamics by a linear probe") {
  // Per-clip mean wrist speed estimates amplitude with noise from the
  // per-segment content draws; enough segments per clip average it away.
  SynthConfig cfg;
  cfg.n_seen = 10;
  cfg.n_unseen = 3;
  cfg.clips_per_speaker = 4;
  cfg.segments_per_clip = 32;
  cfg.seed = 23;
  const Dataset ds = generate_synthetic(cfg);
  std::vector<double> speed, amplitude;
  for (std::size_t sp = 0; sp < ds.speakers.size(); ++sp) {
    const SyntheticStyle style = sample_style(cfg.seed, static_cast<int>(sp));
    for (const auto& clip : ds.clips) {
      if (clip.speaker_id != ds.speakers[sp].id) continue;
      speed.push_back(mean_wrist_speed(clip));
      amplitude.push_back(style.amplitude);
    }
  }
  CHECK(speed.size() == 52);
  CHECK(r_squared(speed, amplitude) > 0.9);
}

TEST_CASE("save then load round-trips the corpus bitwise") {
  SynthConfig cfg;
  cfg.n_seen = 2;
  cfg.n_unseen = 1;
  cfg.clips_per_speaker = 2;
  cfg.segments_per_clip = 2;
  cfg.seed = 13;
  const Dataset ds = generate_synthetic(cfg);
  const fs::path dir = temp_dir("roundtrip");
  save_dataset(ds, dir);
  const Dataset back = load_dataset(dir / "manifest.json");
  CHECK(datasets_equal(ds, back));
  CHECK(back.speakers.size() == ds.speakers.size());
  fs::remove_all(dir);
}

TEST_CASE("loader reports shape violations with clip and segment") {
  const fs::path dir = temp_dir("badshape");
  {
    std::ofstream os(dir / "bad.jsonl");
    os << "{\"text\":[";
    for (int i = 0; i < 767; ++i) os << (i ? "," : "") << "0.5";
    os << "],\"mel\":[[0.1],[0.2]]}\n";
  }
  try {
    load_clip(dir / "bad.jsonl");
    FAIL("expected a BadShape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
    const std::string msg = e.what();
    CHECK(msg.find("segment 0") != std::string::npos);
    CHECK(msg.find("768") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("loader reports missing clip files from the manifest") {
  const fs::path dir = temp_dir("missing");
  {
    std::ofstream os(dir / "manifest.json");
    os << R"({"version":1,"fps":15.0,
      "speakers":[{"id":"a","split_role":"seen"}],
      "clips":[{"speaker_id":"a","split":"train","path":"clips/gone.jsonl"}]})";
  }
  try {
    load_dataset(dir / "manifest.json");
    FAIL("expected a MissingFile error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(std::string(e.what()).find("gone.jsonl") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("normalization maps a {0,1} stream to {-0.5,+0.5}") {
  Dataset ds;
  Clip clip;
  clip.id = "c";
  clip.speaker_id = "a";
  clip.split = Split::Train;
  Segment seg;
  seg.text.resize(kTextDim);
  for (int i = 0; i < kTextDim; ++i) seg.text[i] = i % 2;
  seg.mel = nn::Tensor<double>(kMelBins, 4);
  for (std::size_t i = 0; i < seg.mel.size(); ++i)
    seg.mel.data[i] = (i / 2) % 2;
  seg.poses = nn::Tensor<double>(kSegmentFrames, kPoseDim);
  for (std::size_t i = 0; i < seg.poses.size(); ++i)
    seg.poses.data[i] = (i / 3) % 2;
  clip.segments.push_back(seg);
  ds.speakers.push_back({"a", true});
  ds.clips.push_back(clip);

  const NormStats stats = fit_and_normalize(ds);
  CHECK(stats.text_mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(stats.text_std == doctest::Approx(0.5).epsilon(1e-12));
  for (double v : ds.clips[0].segments[0].text)
    CHECK(std::abs(std::abs(v) - 0.5) < 1e-12);
  for (double v : ds.clips[0].segments[0].mel.data)
    CHECK(std::abs(std::abs(v) - 0.5) < 1e-12);
}

TEST_CASE("normalized train streams hit mean 0 and std 0.5, and refitting is "
          "idempotent") {
  SynthConfig cfg;
  cfg.n_seen = 3;
  cfg.n_unseen = 1;
  cfg.seed = 17;
  Dataset ds = generate_synthetic(cfg);
  fit_and_normalize(ds);

  double sum = 0, sumsq = 0;
  std::size_t n = 0;
  for (const auto& clip : ds.clips) {
    if (clip.split != Split::Train) continue;
    for (const auto& seg : clip.segments)
      for (double v : seg.poses.data) {
        sum += v;
        sumsq += v * v;
        ++n;
      }
  }
  const double mean = sum / n;
  const double stdev = std::sqrt(sumsq / n - mean * mean);
  CHECK(std::abs(mean) < 1e-6);
  CHECK(std::abs(stdev - 0.5) < 1e-6);

  Dataset copy = ds;
  fit_and_normalize(copy);
  for (std::size_t ci = 0; ci < ds.clips.size(); ++ci)
    for (std::size_t si = 0; si < ds.clips[ci].segments.size(); ++si) {
      const auto& a = ds.clips[ci].segments[si].poses.data;
      const auto& b = copy.clips[ci].segments[si].poses.data;
      for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(b[i] - a[i]) <=
              1e-9 * std::max(1.0, std::abs(a[i])));
    }
}

TEST_CASE("normalization inverts to the original values") {
  SynthConfig cfg;
  cfg.n_seen = 2;
  cfg.n_unseen = 0;
  cfg.seed = 23;
  Dataset ds = generate_synthetic(cfg);
  const Dataset original = ds;
  const NormStats stats = fit_and_normalize(ds);
  for (std::size_t ci = 0; ci < ds.clips.size(); ++ci)
    for (std::size_t si = 0; si < ds.clips[ci].segments.size(); ++si) {
      const auto& norm = ds.clips[ci].segments[si].poses.data;
      const auto& orig = original.clips[ci].segments[si].poses.data;
      for (std::size_t i = 0; i < norm.size(); ++i) {
        const double back = stats.denorm_pose(norm[i]);
        CHECK(std::abs(back - orig[i]) <=
              1e-9 * std::max(1.0, std::abs(orig[i])));
      }
    }
}

TEST_CASE("a constant stream aborts normalization with the stream name") {
  Dataset ds;
  Clip clip;
  clip.id = "c";
  clip.speaker_id = "a";
  clip.split = Split::Train;
  Segment seg;
  seg.text.assign(kTextDim, 0.0);
  for (int i = 0; i < kTextDim; ++i) seg.text[i] = i % 2;
  seg.mel = nn::Tensor<double>(kMelBins, 4, 3.0);  // constant 3.0
  seg.poses = nn::Tensor<double>(kSegmentFrames, kPoseDim);
  for (std::size_t i = 0; i < seg.poses.size(); ++i)
    seg.poses.data[i] = static_cast<double>(i % 5);
  clip.segments.push_back(seg);
  ds.speakers.push_back({"a", true});
  ds.clips.push_back(clip);
  try {
    fit_and_normalize(ds);
    FAIL("expected DegenerateStream");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(std::string(e.what()).find("mel") != std::string::npos);
  }
}

TEST_CASE("segment_view preserves order and identity") {
  SynthConfig cfg;
  cfg.n_seen = 1;
  cfg.n_unseen = 0;
  cfg.clips_per_speaker = 1;
  cfg.segments_per_clip = 3;
  const Dataset ds = generate_synthetic(cfg);
  const auto& segs = segment_view(ds.clips[0]);
  CHECK(segs.size() == 3);
  for (std::size_t i = 0; i < segs.size(); ++i)
    CHECK(segments_equal(segs[i], ds.clips[0].segments[i]));
}

TEST_CASE("norm stats survive a json round trip") {
  NormStats s;
  s.fitted = true;
  s.text_mean = 0.123456789012345;
  s.text_std = 1.5;
  s.mel_mean = -2.25;
  s.mel_std = 0.75;
  s.pose_mean = 0.5;
  s.pose_std = 0.0625;
  const NormStats back = norm_stats_from_json(norm_stats_to_json(s));
  CHECK(back.fitted);
  CHECK(back.text_mean == s.text_mean);
  CHECK(back.text_std == s.text_std);
  CHECK(back.mel_mean == s.mel_mean);
  CHECK(back.mel_std == s.mel_std);
  CHECK(back.pose_mean == s.pose_mean);
  CHECK(back.pose_std == s.pose_std);
}
