#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>

namespace zsmstm {

// Error taxonomy shared by every module. `kind` maps 1:1 onto the CLI exit
// codes (usage=1, data=2, numeric=3); `name` is module-qualified, e.g.
// "data::BadShape".
enum class ErrorKind { Usage = 1, Data = 2, Numeric = 3, Io = 2 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string name, const std::string& message)
      : std::runtime_error(name + ": " + message),
        kind_(kind),
        name_(std::move(name)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& name() const { return name_; }

 private:
  ErrorKind kind_;
  std::string name_;
};

[[noreturn]] inline void throw_usage(const std::string& name, const std::string& msg) {
  throw Error(ErrorKind::Usage, name, msg);
}
[[noreturn]] inline void throw_data(const std::string& name, const std::string& msg) {
  throw Error(ErrorKind::Data, name, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& name, const std::string& msg) {
  throw Error(ErrorKind::Numeric, name, msg);
}

// splitmix64, used to derive stream-specific sub-seeds from one run seed.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  uint64_t s = seed ^ (0xA0761D6478BD642FULL * (stream + 1));
  return splitmix64(s);
}

// Deterministic RNG. All draws go through explicit formulas on top of
// std::mt19937_64 so sequences do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n) {  // in [0, n)
    return static_cast<int>(engine_() % static_cast<uint64_t>(n));
  }

  // Box-Muller; one value per call, the pair partner is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  template <typename It>
  void shuffle(It first, It last) {
    auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      auto j = static_cast<decltype(i)>(engine_() % static_cast<uint64_t>(i + 1));
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Worker-thread cap. Defaults to 1 (ZSMSTM_THREADS overrides); kernels are
// written so results are bitwise identical for any thread count.
int max_threads();
void set_max_threads(int n);

// FNV-1a over raw bytes; used for parameter-mutation checks.
uint64_t hash_bytes(const void* data, size_t size);

}  // namespace zsmstm
