#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "zsmstm/nn/tensor.hpp"

namespace zsmstm::nn {

// Checkpoint layout, all integers little-endian:
//   magic "ZSMSTM01"
//   u64 header length, then that many bytes of JSON (model config and
//     whatever else inference needs; the loader hands it back verbatim)
//   per parameter, in store order: u32 name length, name bytes, u32 rank,
//     u64 per dim, f32 payload
//   the same records again for Adam first moments, then second moments
//   u64 global step

inline constexpr char kCheckpointMagic[8] = {'Z', 'S', 'M', 'S',
                                             'T', 'M', '0', '1'};

namespace detail {

template <typename U>
void put(std::ostream& os, U v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <typename U>
U take(std::istream& is, const std::string& what) {
  U v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(U));
  if (!is) throw_data("checkpoint::SchemaViolation", "truncated at " + what);
  return v;
}

template <typename T>
void put_record(std::ostream& os, const std::string& name,
                const Tensor<T>& t) {
  put<uint32_t>(os, static_cast<uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  put<uint32_t>(os, 2);
  put<uint64_t>(os, static_cast<uint64_t>(t.rows));
  put<uint64_t>(os, static_cast<uint64_t>(t.cols));
  for (const T& v : t.data) put<float>(os, static_cast<float>(v));
}

template <typename T>
void take_record(std::istream& is, const std::string& expect_name,
                 Tensor<T>& t) {
  const auto name_len = take<uint32_t>(is, "record name length");
  std::string name(name_len, '\0');
  is.read(name.data(), name_len);
  if (!is) throw_data("checkpoint::SchemaViolation", "truncated record name");
  if (name != expect_name)
    throw_data("checkpoint::SchemaViolation",
               "record order mismatch: expected " + expect_name + ", found " +
                   name);
  const auto rank = take<uint32_t>(is, name + " rank");
  if (rank != 2)
    throw_data("checkpoint::SchemaViolation", name + " has rank != 2");
  const auto rows = take<uint64_t>(is, name + " rows");
  const auto cols = take<uint64_t>(is, name + " cols");
  if (rows != static_cast<uint64_t>(t.rows) ||
      cols != static_cast<uint64_t>(t.cols))
    throw_data("checkpoint::SchemaViolation",
               name + " shape does not match the model being loaded");
  for (T& v : t.data) v = static_cast<T>(take<float>(is, name + " payload"));
}

}  // namespace detail

// Moments must be in store order with shapes matching the parameters; pass
// zero-filled tensors when saving an untrained model.
template <typename T>
void save_checkpoint(const std::filesystem::path& path,
                     const std::string& header_json, const ParamStore<T>& ps,
                     const std::vector<Tensor<T>>& m,
                     const std::vector<Tensor<T>>& v, uint64_t step) {
  if (m.size() != ps.count() || v.size() != ps.count())
    throw_data("checkpoint::SchemaViolation",
               "optimizer moments do not cover the parameter store");
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os)
      throw_data("checkpoint::WriteFailed", "cannot open " + tmp.string());
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::put<uint64_t>(os, static_cast<uint64_t>(header_json.size()));
    os.write(header_json.data(),
             static_cast<std::streamsize>(header_json.size()));
    for (std::size_t i = 0; i < ps.count(); ++i)
      detail::put_record(os, ps.at(i).name, ps.at(i).value);
    for (std::size_t i = 0; i < ps.count(); ++i)
      detail::put_record(os, ps.at(i).name, m[i]);
    for (std::size_t i = 0; i < ps.count(); ++i)
      detail::put_record(os, ps.at(i).name, v[i]);
    detail::put<uint64_t>(os, step);
    os.flush();
    if (!os)
      throw_data("checkpoint::DiskFull", "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw_data("checkpoint::DiskFull",
               "cannot move checkpoint into place: " + ec.message());
}

inline std::string read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw_data("checkpoint::MissingFile", "cannot open " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(magic, magic + sizeof(magic), kCheckpointMagic))
    throw_data("checkpoint::SchemaViolation",
               "bad magic in " + path.string());
  const auto len = detail::take<uint64_t>(is, "header length");
  std::string json(len, '\0');
  is.read(json.data(), static_cast<std::streamsize>(len));
  if (!is) throw_data("checkpoint::SchemaViolation", "truncated header");
  return json;
}

// Loads values and moments into a store laid out identically to the one the
// file was saved from. Returns the global step; out_m/out_v may be null when
// the caller does not resume training.
template <typename T>
uint64_t load_checkpoint(const std::filesystem::path& path, ParamStore<T>& ps,
                         std::vector<Tensor<T>>* out_m,
                         std::vector<Tensor<T>>* out_v,
                         std::string* out_header = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw_data("checkpoint::MissingFile", "cannot open " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(magic, magic + sizeof(magic), kCheckpointMagic))
    throw_data("checkpoint::SchemaViolation", "bad magic in " + path.string());
  const auto len = detail::take<uint64_t>(is, "header length");
  std::string json(len, '\0');
  is.read(json.data(), static_cast<std::streamsize>(len));
  if (!is) throw_data("checkpoint::SchemaViolation", "truncated header");
  if (out_header) *out_header = json;
  for (std::size_t i = 0; i < ps.count(); ++i)
    detail::take_record(is, ps.at(i).name, ps.at(i).value);
  std::vector<Tensor<T>> m_local, v_local;
  std::vector<Tensor<T>>& m = out_m ? *out_m : m_local;
  std::vector<Tensor<T>>& v = out_v ? *out_v : v_local;
  m.clear();
  v.clear();
  for (std::size_t i = 0; i < ps.count(); ++i) {
    m.emplace_back(ps.at(i).value.rows, ps.at(i).value.cols);
    detail::take_record(is, ps.at(i).name, m.back());
  }
  for (std::size_t i = 0; i < ps.count(); ++i) {
    v.emplace_back(ps.at(i).value.rows, ps.at(i).value.cols);
    detail::take_record(is, ps.at(i).name, v.back());
  }
  return detail::take<uint64_t>(is, "global step");
}

}  // namespace zsmstm::nn
