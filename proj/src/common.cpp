#include "zsmstm/common.hpp"

#include <atomic>
#include <cstring>

namespace zsmstm {

namespace {

int env_threads() {
  const char* v = std::getenv("ZSMSTM_THREADS");
  if (!v) return 1;
  int n = std::atoi(v);
  return n >= 1 ? n : 1;
}

std::atomic<int> g_threads{0};  // 0 = uninitialized

}  // namespace

int max_threads() {
  int n = g_threads.load(std::memory_order_relaxed);
  if (n == 0) {
    n = env_threads();
    g_threads.store(n, std::memory_order_relaxed);
  }
  return n;
}

void set_max_threads(int n) {
  g_threads.store(n >= 1 ? n : 1, std::memory_order_relaxed);
}

uint64_t hash_bytes(const void* data, size_t size) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xCBF29CE484222325ULL;
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace zsmstm
