#pragma once

#include <string>

#include "zsmstm/common.hpp"

namespace zsmstm::model {

// Input modality switches: an ablated modality has its encoding replaced by
// zeros everywhere it would enter the network.
struct Ablate {
  bool text = false;
  bool audio = false;
  bool pose = false;

  bool any() const { return text || audio || pose; }
  std::string to_string() const;
  static Ablate parse(const std::string& csv);
};

struct ModelConfig {
  int d_model = 768;
  int ast_layers = 12;
  int ast_heads = 12;
  int content_heads = 4;
  int d_att = 1536;
  int pose_lstm_layers = 3;
  int pose_lstm_hidden = 768;
  int dec_layers = 1;
  int dec_heads = 2;
  int patch_h = 16;
  int patch_w = 16;
  int stride_f = 10;
  int stride_t = 10;
  int pose_dim = 22;
  int seg_len = 64;
  int mel_bins = 128;
  int mel_frames = 64;
  int text_input_dim = 768;
  int ffn_ratio = 4;
  std::string profile = "paper";

  int h_style_dim() const { return d_att + d_model; }
  // Width the text embedding occupies inside the fused content/style vector;
  // a learned projection maps the raw text embedding here when they differ.
  int text_fused_dim() const { return d_att - d_model; }
  bool needs_text_proj() const { return text_fused_dim() != text_input_dim; }

  int patches_f() const { return (mel_bins - patch_h) / stride_f + 1; }
  int patches_t() const { return (mel_frames - patch_w) / stride_t + 1; }
  int num_patches() const { return patches_f() * patches_t(); }
  int ast_tokens() const { return num_patches() + 1; }

  void validate() const;

  static ModelConfig paper();
  static ModelConfig desk();
  // Tiny shapes for finite-difference checking; not a spec profile.
  static ModelConfig micro();
  static ModelConfig by_name(const std::string& profile);

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

}  // namespace zsmstm::model
