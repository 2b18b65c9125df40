#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "zsmstm/data/types.hpp"
#include "zsmstm/model/config.hpp"
#include "zsmstm/nn/layers.hpp"

namespace zsmstm::model {

using nn::Graph;
using nn::Tensor;
using nn::Var;

// One segment's model-ready inputs. Poses may be absent (rows == 0) for
// content-only use; the style encoder requires them unless pose-ablated.
template <typename T>
struct SegmentInput {
  Tensor<T> text;   // 1 x text_input_dim
  Tensor<T> mel;    // mel_bins x mel_frames
  Tensor<T> poses;  // seg_len x pose_dim
  bool has_poses() const { return poses.rows > 0; }
};

template <typename T>
Tensor<T> cast_tensor(const Tensor<double>& src) {
  Tensor<T> out(src.rows, src.cols);
  for (size_t i = 0; i < src.data.size(); ++i)
    out.data[i] = static_cast<T>(src.data[i]);
  return out;
}

template <typename T>
SegmentInput<T> segment_input(const data::Segment& s) {
  SegmentInput<T> in;
  in.text = Tensor<T>(1, static_cast<int>(s.text.size()));
  for (size_t i = 0; i < s.text.size(); ++i)
    in.text.data[i] = static_cast<T>(s.text[i]);
  in.mel = cast_tensor<T>(s.mel);
  if (s.has_poses()) in.poses = cast_tensor<T>(s.poses);
  return in;
}

template <typename T>
std::vector<SegmentInput<T>> clip_inputs(const data::Clip& clip) {
  std::vector<SegmentInput<T>> out;
  out.reserve(clip.segments.size());
  for (const auto& s : clip.segments) out.push_back(segment_input<T>(s));
  return out;
}

template <typename T>
Tensor<T> materialize(Var<T> v) {
  Tensor<T> out(v.rows(), v.cols());
  std::copy(v.ptr(), v.ptr() + out.data.size(), out.data.begin());
  return out;
}

// Spectrogram encoder: overlapping patches, linear projection, learned
// positions, a learned classification token, a transformer stack; the final
// classification row is the utterance embedding.
template <typename T>
struct AstEncoder {
  const ModelConfig* cfg = nullptr;
  nn::Linear<T> patch_proj;
  nn::Param<T>* pos = nullptr;
  nn::Param<T>* cls = nullptr;
  std::vector<nn::EncoderLayer<T>> layers;

  AstEncoder() = default;
  AstEncoder(nn::ParamStore<T>& ps, const std::string& name,
             const ModelConfig& c, Rng& rng)
      : cfg(&c) {
    patch_proj =
        nn::Linear<T>(ps, name + ".patch", c.patch_h * c.patch_w, c.d_model, rng);
    pos = &ps.add(name + ".pos", c.num_patches(), c.d_model);
    cls = &ps.add(name + ".cls", 1, c.d_model);
    for (auto& v : pos->value.data) v = static_cast<T>(0.02 * rng.normal());
    for (auto& v : cls->value.data) v = static_cast<T>(0.02 * rng.normal());
    for (int l = 0; l < c.ast_layers; ++l)
      layers.emplace_back(ps, name + ".l" + std::to_string(l), c.d_model,
                          c.ast_heads, c.ffn_ratio * c.d_model, rng);
  }

  // Rows are patches in frequency-major order; columns flatten each
  // patch_h x patch_w window row-major.
  Tensor<T> extract_patches(const Tensor<T>& mel) const {
    const ModelConfig& c = *cfg;
    if (mel.rows < c.patch_h || mel.cols < c.patch_w)
      throw_data("model::ShapeMismatch",
                 "mel " + std::to_string(mel.rows) + "x" +
                     std::to_string(mel.cols) + " smaller than one " +
                     std::to_string(c.patch_h) + "x" +
                     std::to_string(c.patch_w) + " patch");
    if (mel.rows != c.mel_bins || mel.cols != c.mel_frames)
      throw_data("model::ShapeMismatch",
                 "mel " + std::to_string(mel.rows) + "x" +
                     std::to_string(mel.cols) + " does not match configured " +
                     std::to_string(c.mel_bins) + "x" +
                     std::to_string(c.mel_frames));
    Tensor<T> patches(c.num_patches(), c.patch_h * c.patch_w);
    for (int pf = 0; pf < c.patches_f(); ++pf)
      for (int pt = 0; pt < c.patches_t(); ++pt) {
        const int row = pf * c.patches_t() + pt;
        for (int i = 0; i < c.patch_h; ++i)
          for (int j = 0; j < c.patch_w; ++j)
            patches.at(row, i * c.patch_w + j) =
                mel.at(pf * c.stride_f + i, pt * c.stride_t + j);
      }
    return patches;
  }

  Var<T> operator()(Graph<T>& g, const Tensor<T>& mel) const {
    Var<T> x = patch_proj(g, g.input(extract_patches(mel)));
    x = g.add(x, g.leaf(*pos));
    x = g.concat_rows(g.leaf(*cls), x);
    for (const auto& layer : layers) x = layer(g, x);
    return g.slice_rows(x, 0, 1);
  }
};

// Fuses the speech embedding with the text vector and attends across the
// window's segments; one output row per segment.
template <typename T>
struct ContentEncoder {
  const ModelConfig* cfg = nullptr;
  AstEncoder<T> ast;
  nn::Linear<T> text_proj;
  nn::MultiHeadAttention<T> attn;

  ContentEncoder() = default;
  ContentEncoder(nn::ParamStore<T>& ps, const std::string& name,
                 const ModelConfig& c, Rng& rng)
      : cfg(&c) {
    ast = AstEncoder<T>(ps, name + ".ast", c, rng);
    if (c.needs_text_proj())
      text_proj = nn::Linear<T>(ps, name + ".text", c.text_input_dim,
                                c.text_fused_dim(), rng);
    attn = nn::MultiHeadAttention<T>(ps, name + ".attn", c.d_att,
                                     c.content_heads, rng);
  }

  Var<T> text_row(Graph<T>& g, const SegmentInput<T>& seg) const {
    if (seg.text.cols != cfg->text_input_dim)
      throw_data("model::ShapeMismatch",
                 "text length " + std::to_string(seg.text.cols) +
                     ", expected " + std::to_string(cfg->text_input_dim));
    Var<T> t = g.input(seg.text);
    if (text_proj.w) t = text_proj(g, t);
    return t;
  }

  Var<T> operator()(Graph<T>& g,
                    const std::vector<SegmentInput<T>>& window) const {
    if (window.empty())
      throw_data("model::ShapeMismatch", "content window has no segments");
    std::vector<Var<T>> rows;
    rows.reserve(window.size());
    for (const auto& seg : window)
      rows.push_back(g.concat_cols(ast(g, seg.mel), text_row(g, seg)));
    Var<T> fused = g.concat_rows(rows);
    return attn(g, fused, fused);
  }
};

// Per-segment style components, exposed for the embedding export alongside
// the pooled clip vector.
template <typename T>
struct StyleParts {
  Var<T> text;    // S x text_fused_dim
  Var<T> speech;  // S x d_model
  Var<T> pose;    // S x d_model
  Var<T> fused;   // S x d_att, attention over [text, speech] rows
  Var<T> styles;  // S x (d_att + d_model)
  Var<T> clip;    // 1 x (d_att + d_model), mean over segments
};

template <typename T>
struct StyleEncoder {
  const ModelConfig* cfg = nullptr;
  AstEncoder<T> ast;
  nn::Linear<T> text_proj;
  nn::MultiHeadAttention<T> attn;
  nn::LstmStack<T> pose_enc;

  StyleEncoder() = default;
  StyleEncoder(nn::ParamStore<T>& ps, const std::string& name,
               const ModelConfig& c, Rng& rng)
      : cfg(&c) {
    ast = AstEncoder<T>(ps, name + ".ast", c, rng);
    if (c.needs_text_proj())
      text_proj = nn::Linear<T>(ps, name + ".text", c.text_input_dim,
                                c.text_fused_dim(), rng);
    attn = nn::MultiHeadAttention<T>(ps, name + ".attn", c.d_att,
                                     c.content_heads, rng);
    pose_enc = nn::LstmStack<T>(ps, name + ".pose", c.pose_dim,
                                c.pose_lstm_hidden, c.pose_lstm_layers, rng);
  }

  Var<T> pose_row(Graph<T>& g, const SegmentInput<T>& seg,
                  const Ablate& ab) const {
    if (ab.pose) {
      Tensor<T> zeros(1, cfg->pose_lstm_hidden);
      return g.input(zeros);
    }
    if (!seg.has_poses())
      throw_data("model::MissingPoses",
                 "style encoding requires poses for every segment");
    if (seg.poses.rows != cfg->seg_len || seg.poses.cols != cfg->pose_dim)
      throw_data("model::ShapeMismatch",
                 "poses " + std::to_string(seg.poses.rows) + "x" +
                     std::to_string(seg.poses.cols) + ", expected " +
                     std::to_string(cfg->seg_len) + "x" +
                     std::to_string(cfg->pose_dim));
    Var<T> seq = pose_enc(g, g.input(seg.poses));
    return g.slice_rows(seq, seq.rows() - 1, seq.rows());
  }

  StyleParts<T> parts(Graph<T>& g, const std::vector<SegmentInput<T>>& segs,
                      const Ablate& ab = {}) const {
    if (segs.empty())
      throw_data("model::ShapeMismatch", "style clip has no segments");
    const ModelConfig& c = *cfg;
    std::vector<Var<T>> text_rows, speech_rows, pose_rows;
    for (const auto& seg : segs) {
      if (ab.text) {
        Tensor<T> zeros(1, c.text_fused_dim());
        text_rows.push_back(g.input(zeros));
      } else {
        if (seg.text.cols != c.text_input_dim)
          throw_data("model::ShapeMismatch",
                     "text length " + std::to_string(seg.text.cols) +
                         ", expected " + std::to_string(c.text_input_dim));
        Var<T> t = g.input(seg.text);
        if (text_proj.w) t = text_proj(g, t);
        text_rows.push_back(t);
      }
      if (ab.audio) {
        Tensor<T> zeros(1, c.d_model);
        speech_rows.push_back(g.input(zeros));
      } else {
        speech_rows.push_back(ast(g, seg.mel));
      }
      pose_rows.push_back(pose_row(g, seg, ab));
    }
    StyleParts<T> out;
    out.text = g.concat_rows(text_rows);
    out.speech = g.concat_rows(speech_rows);
    out.pose = g.concat_rows(pose_rows);
    Var<T> fused_in = g.concat_cols(out.text, out.speech);
    out.fused = attn(g, fused_in, fused_in);
    out.styles = g.concat_cols(out.fused, out.pose);
    out.clip = out.styles.rows() == 1 ? out.styles : g.mean_rows(out.styles);
    return out;
  }

  Var<T> operator()(Graph<T>& g, const std::vector<SegmentInput<T>>& segs,
                    const Ablate& ab = {}) const {
    return parts(g, segs, ab).clip;
  }
};

// Transformer pose decoder: per-segment memory from the fused content+style
// vector, causal self-attention over the shifted pose stream.
template <typename T>
struct PoseGenerator {
  const ModelConfig* cfg = nullptr;
  nn::Linear<T> fuse;      // (d_att + h_style) -> d_model
  nn::Linear<T> in_proj;   // pose_dim -> d_model
  std::vector<nn::DecoderLayer<T>> layers;
  nn::Linear<T> head;      // d_model -> pose_dim

  PoseGenerator() = default;
  PoseGenerator(nn::ParamStore<T>& ps, const std::string& name,
                const ModelConfig& c, Rng& rng)
      : cfg(&c) {
    fuse = nn::Linear<T>(ps, name + ".fuse", c.d_att + c.h_style_dim(),
                         c.d_model, rng);
    in_proj = nn::Linear<T>(ps, name + ".in", c.pose_dim, c.d_model, rng);
    for (int l = 0; l < c.dec_layers; ++l)
      layers.emplace_back(ps, name + ".dec" + std::to_string(l), c.d_model,
                          c.dec_heads, c.ffn_ratio * c.d_model, rng);
    head = nn::Linear<T>(ps, name + ".head", c.d_model, c.pose_dim, rng);
  }

  Var<T> memory(Graph<T>& g, Var<T> h_content, Var<T> h_style) const {
    if (h_content.cols() != cfg->d_att)
      throw_data("model::ShapeMismatch",
                 "h_content width " + std::to_string(h_content.cols()) +
                     ", expected " + std::to_string(cfg->d_att));
    if (h_style.rows() != 1 || h_style.cols() != cfg->h_style_dim())
      throw_data("model::ShapeMismatch",
                 "h_style shape " + std::to_string(h_style.rows()) + "x" +
                     std::to_string(h_style.cols()) + ", expected 1x" +
                     std::to_string(cfg->h_style_dim()));
    Var<T> rep = h_content.rows() == 1
                     ? h_style
                     : g.repeat_rows(h_style, h_content.rows());
    return fuse(g, g.concat_cols(h_content, rep));
  }

  Var<T> decode(Graph<T>& g, const Tensor<T>& dec_in, Var<T> mem) const {
    Var<T> x = in_proj(g, g.input(dec_in));
    Tensor<T> pe = nn::sinusoidal_positions<T>(dec_in.rows, cfg->d_model);
    x = g.add(x, g.input(pe));
    for (const auto& layer : layers) x = layer(g, x, mem);
    return head(g, x);
  }

  // teacher: (S * seg_len) x pose_dim ground truth for the whole window.
  // The decoder sees it shifted right by one frame with a zero start frame.
  Var<T> teacher_forced(Graph<T>& g, Var<T> h_content, Var<T> h_style,
                        const Tensor<T>& teacher) const {
    const int frames = h_content.rows() * cfg->seg_len;
    if (teacher.rows != frames || teacher.cols != cfg->pose_dim)
      throw_data("model::ShapeMismatch",
                 "teacher poses " + std::to_string(teacher.rows) + "x" +
                     std::to_string(teacher.cols) + ", expected " +
                     std::to_string(frames) + "x" +
                     std::to_string(cfg->pose_dim));
    Tensor<T> shifted(teacher.rows, teacher.cols);
    for (int r = 1; r < teacher.rows; ++r)
      for (int c = 0; c < teacher.cols; ++c)
        shifted.at(r, c) = teacher.at(r - 1, c);
    return decode(g, shifted, memory(g, h_content, h_style));
  }

  // Frame-by-frame generation with frozen parameters; each frame re-decodes
  // the prefix, so outputs match the teacher-forced graph fed its own output.
  Tensor<T> autoregressive(const Tensor<T>& h_content,
                           const Tensor<T>& h_style) const {
    const int frames = h_content.rows * cfg->seg_len;
    Tensor<T> mem_values;
    {
      Graph<T> g;
      g.recording = false;
      mem_values = materialize(
          memory(g, g.input(h_content), g.input(h_style)));
    }
    Tensor<T> out(frames, cfg->pose_dim);
    Tensor<T> dec_in(frames, cfg->pose_dim);
    Graph<T> g;
    g.recording = false;
    for (int t = 0; t < frames; ++t) {
      g.clear();
      Tensor<T> prefix(t + 1, cfg->pose_dim);
      std::copy(dec_in.data.begin(),
                dec_in.data.begin() + static_cast<size_t>(t + 1) * cfg->pose_dim,
                prefix.data.begin());
      Var<T> y = decode(g, prefix, g.input(mem_values));
      for (int c = 0; c < cfg->pose_dim; ++c) {
        const T v = y.at(t, c);
        if (!std::isfinite(static_cast<double>(v)))
          throw_numeric("model::AutoregressiveDivergence",
                        "non-finite value at frame " + std::to_string(t));
        out.at(t, c) = v;
        if (t + 1 < frames) dec_in.at(t + 1, c) = v;
      }
    }
    return out;
  }
};

// Predicts the style vector from a content embedding; trained adversarially
// so the content encoder learns to defeat it.
template <typename T>
struct Discriminator {
  const ModelConfig* cfg = nullptr;
  nn::Linear<T> fc1;  // d_att -> d_model
  nn::Linear<T> fc2;  // d_model -> d_att + d_model

  Discriminator() = default;
  Discriminator(nn::ParamStore<T>& ps, const std::string& name,
                const ModelConfig& c, Rng& rng)
      : cfg(&c) {
    fc1 = nn::Linear<T>(ps, name + ".fc1", c.d_att, c.d_model, rng);
    fc2 = nn::Linear<T>(ps, name + ".fc2", c.d_model, c.h_style_dim(), rng);
  }

  Var<T> operator()(Graph<T>& g, Var<T> h_content) const {
    if (h_content.cols() != cfg->d_att)
      throw_data("model::ShapeMismatch",
                 "h_content width " + std::to_string(h_content.cols()) +
                     ", expected " + std::to_string(cfg->d_att));
    return fc2(g, g.tanh_(fc1(g, h_content)));
  }
};

// The full network. Parameter names carry the owning sub-network as a prefix
// so optimizer groups and the separation invariants fall out of the store.
template <typename T>
struct ZsMstm {
  ModelConfig cfg;
  nn::ParamStore<T> params;
  ContentEncoder<T> content;
  StyleEncoder<T> style;
  PoseGenerator<T> generator;
  Discriminator<T> discriminator;

  explicit ZsMstm(const ModelConfig& c, uint64_t seed = 1) : cfg(c) {
    cfg.validate();
    Rng rng(derive_seed(seed, 101));
    content = ContentEncoder<T>(params, "content", cfg, rng);
    style = StyleEncoder<T>(params, "style", cfg, rng);
    generator = PoseGenerator<T>(params, "gen", cfg, rng);
    discriminator = Discriminator<T>(params, "dis", cfg, rng);
  }

  ZsMstm(const ZsMstm&) = delete;
  ZsMstm& operator=(const ZsMstm&) = delete;

  Var<T> encode_content(Graph<T>& g,
                        const std::vector<SegmentInput<T>>& window) const {
    return content(g, window);
  }

  Var<T> encode_style(Graph<T>& g, const std::vector<SegmentInput<T>>& segs,
                      const Ablate& ab = {}) const {
    return style(g, segs, ab);
  }

  StyleParts<T> style_parts(Graph<T>& g,
                            const std::vector<SegmentInput<T>>& segs,
                            const Ablate& ab = {}) const {
    return style.parts(g, segs, ab);
  }

  Var<T> generate(Graph<T>& g, Var<T> h_content, Var<T> h_style,
                  const Tensor<T>& teacher) const {
    return generator.teacher_forced(g, h_content, h_style, teacher);
  }

  Var<T> discriminate(Graph<T>& g, Var<T> h_content) const {
    return discriminator(g, h_content);
  }

  std::vector<nn::Param<T>*> generator_side_params() {
    auto group = params.group("content.");
    for (auto* p : params.group("style.")) group.push_back(p);
    for (auto* p : params.group("gen.")) group.push_back(p);
    return group;
  }

  std::vector<nn::Param<T>*> discriminator_params() {
    return params.group("dis.");
  }
};

}  // namespace zsmstm::model
