// Model hyperparameter profiles, validation, and JSON round trip.

#include "zsmstm/model/config.hpp"

#include <sstream>

#include "json.hpp"

namespace zsmstm::model {

using nlohmann::json;

std::string Ablate::to_string() const {
  std::string out;
  auto append = [&out](const char* name) {
    if (!out.empty()) out += ',';
    out += name;
  };
  if (text) append("text");
  if (audio) append("audio");
  if (pose) append("pose");
  return out;
}

Ablate Ablate::parse(const std::string& csv) {
  Ablate a;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "text") {
      a.text = true;
    } else if (item == "audio") {
      a.audio = true;
    } else if (item == "pose") {
      a.pose = true;
    } else {
      throw_usage("model::BadConfig", "unknown ablation '" + item +
                                          "', expected subset of text,audio,pose");
    }
  }
  return a;
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw_data("model::BadConfig", msg);
  };
  require(d_model > 0, "d_model must be positive");
  require(ast_layers > 0 && ast_heads > 0, "ast encoder needs layers and heads");
  require(d_model % ast_heads == 0, "ast_heads must divide d_model");
  require(d_att > d_model, "d_att must exceed d_model");
  require(d_att % content_heads == 0, "content_heads must divide d_att");
  require(text_fused_dim() > 0, "fused text width must be positive");
  require(pose_lstm_layers > 0, "pose encoder needs at least one layer");
  require(pose_lstm_hidden == d_model,
          "pose encoder hidden size must equal d_model");
  require(dec_layers > 0 && dec_heads > 0, "decoder needs layers and heads");
  require(d_model % dec_heads == 0, "dec_heads must divide d_model");
  require(patch_h > 0 && patch_w > 0 && stride_f > 0 && stride_t > 0,
          "patch and stride must be positive");
  require(mel_bins >= patch_h && mel_frames >= patch_w,
          "mel spectrogram smaller than one patch");
  require(pose_dim > 0 && seg_len > 0, "pose dimensions must be positive");
  require(text_input_dim > 0, "text_input_dim must be positive");
  require(ffn_ratio > 0, "ffn_ratio must be positive");
}

ModelConfig ModelConfig::paper() { return ModelConfig{}; }

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.d_model = 64;
  c.ast_layers = 2;
  c.ast_heads = 2;
  c.d_att = 128;
  c.pose_lstm_hidden = 64;
  c.ffn_ratio = 2;
  c.profile = "desk";
  return c;
}

ModelConfig ModelConfig::micro() {
  ModelConfig c;
  c.d_model = 8;
  c.ast_layers = 1;
  c.ast_heads = 2;
  c.content_heads = 2;
  c.d_att = 16;
  c.pose_lstm_hidden = 8;
  c.dec_heads = 2;
  c.patch_h = 4;
  c.patch_w = 4;
  c.stride_f = 3;
  c.stride_t = 3;
  c.seg_len = 12;
  c.mel_bins = 16;
  c.mel_frames = 12;
  c.text_input_dim = 10;
  c.ffn_ratio = 2;
  c.profile = "micro";
  return c;
}

ModelConfig ModelConfig::by_name(const std::string& profile) {
  if (profile == "paper") return paper();
  if (profile == "desk") return desk();
  if (profile == "micro") return micro();
  throw_usage("model::BadConfig", "unknown profile '" + profile + "'");
}

std::string ModelConfig::to_json() const {
  json j;
  j["d_model"] = d_model;
  j["ast_layers"] = ast_layers;
  j["ast_heads"] = ast_heads;
  j["content_heads"] = content_heads;
  j["d_att"] = d_att;
  j["pose_lstm_layers"] = pose_lstm_layers;
  j["pose_lstm_hidden"] = pose_lstm_hidden;
  j["dec_layers"] = dec_layers;
  j["dec_heads"] = dec_heads;
  j["patch_h"] = patch_h;
  j["patch_w"] = patch_w;
  j["stride_f"] = stride_f;
  j["stride_t"] = stride_t;
  j["pose_dim"] = pose_dim;
  j["seg_len"] = seg_len;
  j["mel_bins"] = mel_bins;
  j["mel_frames"] = mel_frames;
  j["text_input_dim"] = text_input_dim;
  j["ffn_ratio"] = ffn_ratio;
  j["profile"] = profile;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw_data("model::BadConfig", std::string("config is not valid JSON: ") + e.what());
  }
  ModelConfig c;
  try {
    j.at("d_model").get_to(c.d_model);
    j.at("ast_layers").get_to(c.ast_layers);
    j.at("ast_heads").get_to(c.ast_heads);
    j.at("content_heads").get_to(c.content_heads);
    j.at("d_att").get_to(c.d_att);
    j.at("pose_lstm_layers").get_to(c.pose_lstm_layers);
    j.at("pose_lstm_hidden").get_to(c.pose_lstm_hidden);
    j.at("dec_layers").get_to(c.dec_layers);
    j.at("dec_heads").get_to(c.dec_heads);
    j.at("patch_h").get_to(c.patch_h);
    j.at("patch_w").get_to(c.patch_w);
    j.at("stride_f").get_to(c.stride_f);
    j.at("stride_t").get_to(c.stride_t);
    j.at("pose_dim").get_to(c.pose_dim);
    j.at("seg_len").get_to(c.seg_len);
    j.at("mel_bins").get_to(c.mel_bins);
    j.at("mel_frames").get_to(c.mel_frames);
    j.at("text_input_dim").get_to(c.text_input_dim);
    j.at("ffn_ratio").get_to(c.ffn_ratio);
    j.at("profile").get_to(c.profile);
  } catch (const json::exception& e) {
    throw_data("model::BadConfig", std::string("config field missing or mistyped: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace zsmstm::model
