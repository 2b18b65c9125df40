// Model wiring: profiles, encoders, generator, discriminator, and the
// separation/causality/pooling invariants the trainer depends on.

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "doctest.h"
#include "zsmstm/model/networks.hpp"
#include "zsmstm/nn/grad_check.hpp"

using namespace zsmstm;
using model::Ablate;
using model::ModelConfig;
using model::SegmentInput;
using model::ZsMstm;
using nn::Graph;
using nn::Tensor;
using nn::Var;

namespace {

template <typename T>
Tensor<T> random_tensor(int rows, int cols, Rng& rng, double scale = 0.5) {
  Tensor<T> t(rows, cols);
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(-scale, scale));
  return t;
}

template <typename T>
SegmentInput<T> random_segment(const ModelConfig& cfg, Rng& rng,
                               bool with_poses = true) {
  SegmentInput<T> seg;
  seg.text = random_tensor<T>(1, cfg.text_input_dim, rng);
  seg.mel = random_tensor<T>(cfg.mel_bins, cfg.mel_frames, rng);
  if (with_poses) seg.poses = random_tensor<T>(cfg.seg_len, cfg.pose_dim, rng);
  return seg;
}

template <typename T>
std::vector<SegmentInput<T>> random_clip(const ModelConfig& cfg, Rng& rng,
                                         int segments) {
  std::vector<SegmentInput<T>> out;
  for (int i = 0; i < segments; ++i) out.push_back(random_segment<T>(cfg, rng));
  return out;
}

template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.rows == b.rows && a.cols == b.cols &&
         std::memcmp(a.data.data(), b.data.data(), a.size() * sizeof(T)) == 0;
}

template <typename T>
double max_abs_grad(const std::vector<nn::Param<T>*>& group) {
  double m = 0;
  for (const auto* p : group)
    for (T v : p->grad.data) m = std::max(m, std::abs(static_cast<double>(v)));
  return m;
}

}  // namespace

TEST_SUITE("model config") {
  TEST_CASE("paper profile carries the published widths") {
    const ModelConfig c = ModelConfig::paper();
    c.validate();
    CHECK(c.d_att == c.d_model + 768);
    CHECK(c.h_style_dim() == 2304);
    CHECK(c.text_fused_dim() == 768);
    CHECK_FALSE(c.needs_text_proj());
    CHECK(c.patches_f() == 12);
    CHECK(c.patches_t() == 5);
    CHECK(c.ast_tokens() == 61);
  }

  TEST_CASE("desk profile shrinks widths but keeps the patch grid") {
    const ModelConfig c = ModelConfig::desk();
    c.validate();
    CHECK(c.d_model == 64);
    CHECK(c.d_att == 128);
    CHECK(c.h_style_dim() == 192);
    CHECK(c.ast_tokens() == 61);
    CHECK(c.needs_text_proj());
    CHECK(c.text_fused_dim() == 64);
  }

  TEST_CASE("micro profile has a non-empty patch grid") {
    const ModelConfig c = ModelConfig::micro();
    c.validate();
    CHECK(c.patches_f() == 5);
    CHECK(c.patches_t() == 3);
    CHECK(c.ast_tokens() == 16);
    CHECK(c.h_style_dim() == 24);
  }

  TEST_CASE("json round trip preserves every field") {
    const ModelConfig a = ModelConfig::desk();
    const ModelConfig b = ModelConfig::from_json(a.to_json());
    CHECK(b.d_model == a.d_model);
    CHECK(b.ast_layers == a.ast_layers);
    CHECK(b.ast_heads == a.ast_heads);
    CHECK(b.content_heads == a.content_heads);
    CHECK(b.d_att == a.d_att);
    CHECK(b.pose_lstm_layers == a.pose_lstm_layers);
    CHECK(b.pose_lstm_hidden == a.pose_lstm_hidden);
    CHECK(b.dec_layers == a.dec_layers);
    CHECK(b.dec_heads == a.dec_heads);
    CHECK(b.patch_h == a.patch_h);
    CHECK(b.patch_w == a.patch_w);
    CHECK(b.stride_f == a.stride_f);
    CHECK(b.stride_t == a.stride_t);
    CHECK(b.pose_dim == a.pose_dim);
    CHECK(b.seg_len == a.seg_len);
    CHECK(b.mel_bins == a.mel_bins);
    CHECK(b.mel_frames == a.mel_frames);
    CHECK(b.text_input_dim == a.text_input_dim);
    CHECK(b.ffn_ratio == a.ffn_ratio);
    CHECK(b.profile == a.profile);
  }

  TEST_CASE("malformed config json is a data error") {
    CHECK_THROWS_AS(ModelConfig::from_json("not json"), Error);
    try {
      ModelConfig::from_json("{\"d_model\": 64}");
      FAIL("missing fields accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Data);
      CHECK(std::string(e.name()) == "model::BadConfig");
    }
  }

  TEST_CASE("validation rejects inconsistent head and patch settings") {
    ModelConfig c = ModelConfig::paper();
    c.ast_heads = 5;
    CHECK_THROWS_AS(c.validate(), Error);
    c = ModelConfig::paper();
    c.mel_bins = 8;
    CHECK_THROWS_AS(c.validate(), Error);
    c = ModelConfig::paper();
    c.pose_lstm_hidden = 32;
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("profile lookup and ablation parsing") {
    CHECK(ModelConfig::by_name("desk").profile == "desk");
    CHECK_THROWS_AS(ModelConfig::by_name("huge"), Error);
    Ablate a = Ablate::parse("pose,text");
    CHECK(a.pose);
    CHECK(a.text);
    CHECK_FALSE(a.audio);
    CHECK(a.to_string() == "text,pose");
    CHECK_FALSE(Ablate::parse("").any());
    try {
      Ablate::parse("mel");
      FAIL("bogus ablation accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Usage);
    }
  }
}

TEST_SUITE("model networks") {
  TEST_CASE("content encoder emits one fused row per window segment") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 11);
    Rng rng(42);
    auto window = random_clip<double>(cfg, rng, 3);
    Graph<double> g;
    Var<double> h = m.encode_content(g, window);
    CHECK(h.rows() == 3);
    CHECK(h.cols() == cfg.d_att);
    for (int i = 0; i < h.rows(); ++i)
      for (int j = 0; j < h.cols(); ++j) CHECK(std::isfinite(h.at(i, j)));
  }

  TEST_CASE("singleton window reduces attention to the value-output path") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 12);
    Rng rng(43);
    auto window = random_clip<double>(cfg, rng, 1);
    Graph<double> g;
    Var<double> h = m.encode_content(g, window);

    Var<double> speech = m.content.ast(g, window[0].mel);
    Var<double> fused = g.concat_cols(speech, m.content.text_row(g, window[0]));
    Var<double> expected = m.content.attn.wo(g, m.content.attn.wv(g, fused));
    REQUIRE(h.cols() == expected.cols());
    for (int j = 0; j < h.cols(); ++j)
      CHECK(h.at(0, j) == doctest::Approx(expected.at(0, j)).epsilon(1e-12));
  }

  TEST_CASE("mel inputs must match the configured spectrogram shape") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 13);
    Graph<double> g;
    Rng rng(44);
    try {
      m.content.ast(g, random_tensor<double>(3, 3, rng));
      FAIL("undersized mel accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Data);
      CHECK(std::string(e.name()) == "model::ShapeMismatch");
      CHECK(std::string(e.what()).find("patch") != std::string::npos);
    }
    CHECK_THROWS_AS(m.content.ast(g, random_tensor<double>(16, 13, rng)), Error);
  }

  TEST_CASE("style encoder pools per-segment vectors into one clip vector") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 14);
    Rng rng(45);
    auto clip = random_clip<double>(cfg, rng, 3);
    Graph<double> g;
    auto parts = m.style_parts(g, clip);
    CHECK(parts.text.rows() == 3);
    CHECK(parts.text.cols() == cfg.text_fused_dim());
    CHECK(parts.speech.cols() == cfg.d_model);
    CHECK(parts.pose.cols() == cfg.pose_lstm_hidden);
    CHECK(parts.fused.cols() == cfg.d_att);
    CHECK(parts.styles.rows() == 3);
    CHECK(parts.styles.cols() == cfg.h_style_dim());
    REQUIRE(parts.clip.rows() == 1);
    REQUIRE(parts.clip.cols() == cfg.h_style_dim());
    for (int j = 0; j < parts.clip.cols(); ++j) {
      double mean = 0;
      for (int i = 0; i < 3; ++i) mean += parts.styles.at(i, j);
      mean /= 3;
      CHECK(parts.clip.at(0, j) == doctest::Approx(mean).epsilon(1e-12));
    }
  }

  TEST_CASE("single-segment clip style equals that segment's vector") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 15);
    Rng rng(46);
    auto clip = random_clip<double>(cfg, rng, 1);
    Graph<double> g;
    auto parts = m.style_parts(g, clip);
    CHECK(bitwise_equal(model::materialize(parts.clip),
                        model::materialize(parts.styles)));
  }

  TEST_CASE("swapping two segments leaves the clip style bitwise unchanged") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 16);
    Rng rng(47);
    auto clip = random_clip<double>(cfg, rng, 2);
    Graph<double> g1;
    Tensor<double> a = model::materialize(m.encode_style(g1, clip));
    std::swap(clip[0], clip[1]);
    Graph<double> g2;
    Tensor<double> b = model::materialize(m.encode_style(g2, clip));
    CHECK(bitwise_equal(a, b));
  }

  TEST_CASE("rotating three segments moves the clip style by at most ulps") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 17);
    Rng rng(48);
    auto clip = random_clip<double>(cfg, rng, 3);
    Graph<double> g1;
    Tensor<double> a = model::materialize(m.encode_style(g1, clip));
    std::rotate(clip.begin(), clip.begin() + 1, clip.end());
    Graph<double> g2;
    Tensor<double> b = model::materialize(m.encode_style(g2, clip));
    for (size_t i = 0; i < a.size(); ++i)
      CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-12));
  }

  TEST_CASE("missing poses are a data error unless pose-ablated") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 18);
    Rng rng(49);
    std::vector<SegmentInput<double>> clip;
    clip.push_back(random_segment<double>(cfg, rng, false));
    Graph<double> g;
    try {
      m.encode_style(g, clip);
      FAIL("poseless clip accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Data);
      CHECK(std::string(e.name()) == "model::MissingPoses");
    }
    Ablate ab;
    ab.pose = true;
    auto parts = m.style_parts(g, clip, ab);
    CHECK(parts.clip.cols() == cfg.h_style_dim());
    for (int j = 0; j < parts.pose.cols(); ++j)
      CHECK(parts.pose.at(0, j) == 0.0);
  }

  TEST_CASE("each ablation zeroes exactly its own component") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 19);
    Rng rng(50);
    auto clip = random_clip<double>(cfg, rng, 2);
    Graph<double> g;

    Ablate text_off;
    text_off.text = true;
    auto pt = m.style_parts(g, clip, text_off);
    for (double v : model::materialize(pt.text).data) CHECK(v == 0.0);
    bool speech_nonzero = false;
    for (double v : model::materialize(pt.speech).data)
      if (v != 0.0) speech_nonzero = true;
    CHECK(speech_nonzero);

    Ablate audio_off;
    audio_off.audio = true;
    auto pa = m.style_parts(g, clip, audio_off);
    for (double v : model::materialize(pa.speech).data) CHECK(v == 0.0);
    CHECK(pa.clip.cols() == cfg.h_style_dim());
  }

  TEST_CASE("generator covers every frame of the window") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 20);
    Rng rng(51);
    auto window = random_clip<double>(cfg, rng, 2);
    Graph<double> g;
    Var<double> hc = m.encode_content(g, window);
    Var<double> hs = m.encode_style(g, window);
    Var<double> mem = m.generator.memory(g, hc, hs);
    CHECK(mem.rows() == 2);
    CHECK(mem.cols() == cfg.d_model);
    Tensor<double> teacher =
        random_tensor<double>(2 * cfg.seg_len, cfg.pose_dim, rng);
    Var<double> out = m.generate(g, hc, hs, teacher);
    CHECK(out.rows() == 2 * cfg.seg_len);
    CHECK(out.cols() == cfg.pose_dim);
  }

  TEST_CASE("causal masking keeps earlier frames bitwise fixed") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 21);
    Rng rng(52);
    auto window = random_clip<double>(cfg, rng, 1);
    Tensor<double> teacher =
        random_tensor<double>(cfg.seg_len, cfg.pose_dim, rng);

    Graph<double> g1;
    Var<double> hc1 = m.encode_content(g1, window);
    Var<double> hs1 = m.encode_style(g1, window);
    Tensor<double> a = model::materialize(m.generate(g1, hc1, hs1, teacher));

    const int k = 5;
    Tensor<double> perturbed = teacher;
    for (int r = k; r < perturbed.rows; ++r)
      for (int c = 0; c < perturbed.cols; ++c) perturbed.at(r, c) += 0.25;
    Graph<double> g2;
    Var<double> hc2 = m.encode_content(g2, window);
    Var<double> hs2 = m.encode_style(g2, window);
    Tensor<double> b = model::materialize(m.generate(g2, hc2, hs2, perturbed));

    for (int r = 0; r < k; ++r)
      for (int c = 0; c < a.cols; ++c) {
        CHECK(a.at(r, c) == b.at(r, c));
      }
    bool later_differs = false;
    for (int r = k + 1; r < a.rows; ++r)
      for (int c = 0; c < a.cols; ++c)
        if (a.at(r, c) != b.at(r, c)) later_differs = true;
    CHECK(later_differs);
  }

  TEST_CASE("autoregressive decoding matches teacher forcing on its output") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 22);
    Rng rng(53);
    auto window = random_clip<double>(cfg, rng, 2);
    Graph<double> g;
    g.recording = false;
    Tensor<double> hc = model::materialize(m.encode_content(g, window));
    Tensor<double> hs = model::materialize(m.encode_style(g, window));

    Tensor<double> ar = m.generator.autoregressive(hc, hs);
    REQUIRE(ar.rows == 2 * cfg.seg_len);

    Graph<double> g2;
    g2.recording = false;
    Tensor<double> tf = model::materialize(
        m.generate(g2, g2.input(hc), g2.input(hs), ar));
    CHECK(bitwise_equal(ar, tf));

    Tensor<double> again = m.generator.autoregressive(hc, hs);
    CHECK(bitwise_equal(ar, again));
  }

  TEST_CASE("autoregressive decoding aborts on the first non-finite frame") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 23);
    m.params.get("gen.head.b").value.fill(
        std::numeric_limits<double>::infinity());
    Rng rng(54);
    Tensor<double> hc = random_tensor<double>(1, cfg.d_att, rng);
    Tensor<double> hs = random_tensor<double>(1, cfg.h_style_dim(), rng);
    try {
      m.generator.autoregressive(hc, hs);
      FAIL("divergence not caught");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Numeric);
      CHECK(std::string(e.name()) == "model::AutoregressiveDivergence");
      CHECK(std::string(e.what()).find("frame 0") != std::string::npos);
    }
  }

  TEST_CASE("discriminator maps content rows to style-sized predictions") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 24);
    Rng rng(55);
    Graph<double> g;
    Var<double> out = m.discriminate(g, g.input(random_tensor<double>(3, cfg.d_att, rng)));
    CHECK(out.rows() == 3);
    CHECK(out.cols() == cfg.h_style_dim());

    for (auto& v : m.params.get("dis.fc1.b").value.data)
      v = rng.uniform(-0.5, 0.5);
    m.params.get("dis.fc2.w").value.zero();
    m.params.get("dis.fc2.b").value.zero();
    Tensor<double> zeros(1, cfg.d_att);
    Var<double> z = m.discriminate(g, g.input(zeros));
    for (int j = 0; j < z.cols(); ++j) CHECK(z.at(0, j) == 0.0);
  }

  TEST_CASE("losses through one embedding leave the other encoders untouched") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 25);
    Rng rng(56);
    auto clip = random_clip<double>(cfg, rng, 2);

    auto content_group = m.params.group("content.");
    auto style_group = m.params.group("style.");
    auto gen_group = m.params.group("gen.");
    auto dis_group = m.params.group("dis.");
    REQUIRE(!content_group.empty());
    REQUIRE(!style_group.empty());

    {
      Graph<double> g;
      Var<double> h = m.encode_style(g, clip);
      Tensor<double> probe = random_tensor<double>(h.rows(), h.cols(), rng, 1.0);
      m.params.zero_grad();
      g.backward(g.mean_all(g.mul(h, g.input(probe))));
      CHECK(max_abs_grad(content_group) == 0.0);
      CHECK(max_abs_grad(gen_group) == 0.0);
      CHECK(max_abs_grad(dis_group) == 0.0);
      CHECK(max_abs_grad(style_group) > 0.0);
    }
    {
      Graph<double> g;
      Var<double> h = m.encode_content(g, clip);
      Tensor<double> probe = random_tensor<double>(h.rows(), h.cols(), rng, 1.0);
      m.params.zero_grad();
      g.backward(g.mean_all(g.mul(h, g.input(probe))));
      CHECK(max_abs_grad(style_group) == 0.0);
      CHECK(max_abs_grad(gen_group) == 0.0);
      CHECK(max_abs_grad(content_group) > 0.0);
    }
  }

  TEST_CASE("sub-network gradients match finite differences") {
    for (uint64_t seed : {3u, 4u, 5u}) {
      const ModelConfig cfg = ModelConfig::micro();
      ZsMstm<double> m(cfg, seed);
      Rng rng(derive_seed(seed, 900));
      auto window = random_clip<double>(cfg, rng, 2);

      {
        Tensor<double> probe =
            random_tensor<double>(2, cfg.d_att, rng, 1.0);
        double err = nn::grad_check<double>(
            m.params.group("content."),
            [&](Graph<double>& g) {
              return g.mean_all(
                  g.mul(m.encode_content(g, window), g.input(probe)));
            });
        CHECK(err < 1e-4);
      }
      {
        Tensor<double> probe =
            random_tensor<double>(1, cfg.h_style_dim(), rng, 1.0);
        double err = nn::grad_check<double>(
            m.params.group("style."),
            [&](Graph<double>& g) {
              return g.mean_all(
                  g.mul(m.encode_style(g, window), g.input(probe)));
            });
        CHECK(err < 1e-4);
      }
      {
        Tensor<double> hc = random_tensor<double>(1, cfg.d_att, rng);
        Tensor<double> hs = random_tensor<double>(1, cfg.h_style_dim(), rng);
        Tensor<double> teacher =
            random_tensor<double>(cfg.seg_len, cfg.pose_dim, rng);
        Tensor<double> probe =
            random_tensor<double>(cfg.seg_len, cfg.pose_dim, rng, 1.0);
        double err = nn::grad_check<double>(
            m.params.group("gen."),
            [&](Graph<double>& g) {
              Var<double> out =
                  m.generate(g, g.input(hc), g.input(hs), teacher);
              return g.mean_all(g.mul(out, g.input(probe)));
            });
        CHECK(err < 1e-4);
      }
      {
        Tensor<double> x = random_tensor<double>(2, cfg.d_att, rng);
        Tensor<double> probe =
            random_tensor<double>(2, cfg.h_style_dim(), rng, 1.0);
        double err = nn::grad_check<double>(
            m.params.group("dis."),
            [&](Graph<double>& g) {
              return g.mean_all(
                  g.mul(m.discriminate(g, g.input(x)), g.input(probe)));
            });
        CHECK(err < 1e-4);
      }
    }
  }

  TEST_CASE("style encoding and generation mutate no parameters") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> m(cfg, 26);
    Rng rng(57);
    auto clip = random_clip<double>(cfg, rng, 2);
    const uint64_t before = m.params.value_hash();
    Graph<double> g;
    g.recording = false;
    Tensor<double> hc = model::materialize(m.encode_content(g, clip));
    Tensor<double> hs = model::materialize(m.encode_style(g, clip));
    m.generator.autoregressive(hc, hs);
    CHECK(m.params.value_hash() == before);
  }

  TEST_CASE("construction and encoding are deterministic") {
    const ModelConfig cfg = ModelConfig::micro();
    ZsMstm<double> a(cfg, 31);
    ZsMstm<double> b(cfg, 31);
    ZsMstm<double> c(cfg, 32);
    CHECK(a.params.value_hash() == b.params.value_hash());
    CHECK(a.params.value_hash() != c.params.value_hash());

    Rng rng(58);
    auto window = random_clip<double>(cfg, rng, 2);
    Graph<double> g1, g2;
    CHECK(bitwise_equal(model::materialize(a.encode_content(g1, window)),
                        model::materialize(b.encode_content(g2, window))));
  }
}

TEST_SUITE("model paper profile") {
  TEST_CASE("published shape chain holds without training") {
    const ModelConfig cfg = ModelConfig::paper();
    ZsMstm<float> m(cfg, 7);
    Rng rng(70);

    auto window = random_clip<float>(cfg, rng, 1);
    auto clip = random_clip<float>(cfg, rng, 3);

    Graph<float> g;
    g.recording = false;
    Var<float> hc = m.encode_content(g, window);
    CHECK(hc.rows() == 1);
    CHECK(hc.cols() == 1536);

    Var<float> hs = m.encode_style(g, clip);
    CHECK(hs.rows() == 1);
    CHECK(hs.cols() == 2304);

    Var<float> mem = m.generator.memory(g, hc, hs);
    CHECK(mem.cols() == 768);

    Tensor<float> teacher = random_tensor<float>(64, 22, rng);
    Var<float> out = m.generate(g, hc, hs, teacher);
    CHECK(out.rows() == 64);
    CHECK(out.cols() == 22);

    Var<float> pred = m.discriminate(g, hc);
    CHECK(pred.cols() == 2304);

    CHECK(cfg.ast_tokens() == 61);
    for (int j = 0; j < hs.cols(); ++j) CHECK(std::isfinite(hs.at(0, j)));
  }
}
