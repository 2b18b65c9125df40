#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "zsmstm/common.hpp"

namespace zsmstm::nn {

// Row-major rank-2 buffer. Vectors are 1 x n or n x 1 as convenient.
template <typename T>
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, T(0)) {}
  Tensor(int r, int c, T fill)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  std::size_t size() const { return data.size(); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
  T& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  const T& at(int i, int j) const {
    return data[static_cast<std::size_t>(i) * cols + j];
  }
  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(T(0)); }
};

// Trainable parameter: value plus an accumulated gradient of the same shape.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param(std::string n, int r, int c)
      : name(std::move(n)), value(r, c), grad(r, c) {}

  void zero_grad() { grad.zero(); }
};

// Ordered collection of parameters. Order of registration defines the
// serialization order of checkpoints, so it must be deterministic.
template <typename T>
class ParamStore {
 public:
  Param<T>& add(const std::string& name, int rows, int cols) {
    if (index_.count(name))
      throw_data("nn::DuplicateParam", "parameter registered twice: " + name);
    params_.push_back(std::make_unique<Param<T>>(name, rows, cols));
    index_.emplace(name, params_.size() - 1);
    return *params_.back();
  }

  Param<T>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end())
      throw_data("nn::UnknownParam", "no such parameter: " + name);
    return *params_[it->second];
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t count() const { return params_.size(); }
  Param<T>& at(std::size_t i) { return *params_[i]; }
  const Param<T>& at(std::size_t i) const { return *params_[i]; }

  std::size_t total_values() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p->zero_grad();
  }

  // Parameters whose name starts with the prefix, in registration order.
  std::vector<Param<T>*> group(const std::string& prefix) {
    std::vector<Param<T>*> out;
    for (auto& p : params_)
      if (p->name.rfind(prefix, 0) == 0) out.push_back(p.get());
    return out;
  }

  uint64_t value_hash() const {
    uint64_t h = 1469598103934665603ull;
    for (const auto& p : params_) {
      h ^= hash_bytes(p->name.data(), p->name.size());
      h *= 1099511628211ull;
      h ^= hash_bytes(p->value.data.data(), p->value.size() * sizeof(T));
      h *= 1099511628211ull;
    }
    return h;
  }

 private:
  std::vector<std::unique_ptr<Param<T>>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace zsmstm::nn
