// Shared matrix aliases, error types, seeding and small numeric helpers.
#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace shuffled_glm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Coefficient matrix B (p x m), one column per response dimension.
using Coefficients = Eigen::MatrixXd;

#define SHGLM_DEFINE_ERROR(Name)                                      \
  struct Name : std::runtime_error {                                  \
    explicit Name(const std::string& what) : std::runtime_error(what) {} \
  }

SHGLM_DEFINE_ERROR(ShapeMismatch);
SHGLM_DEFINE_ERROR(LengthMismatch);
SHGLM_DEFINE_ERROR(DomainError);
SHGLM_DEFINE_ERROR(NonFinite);
SHGLM_DEFINE_ERROR(InvalidDisplacement);
SHGLM_DEFINE_ERROR(SingularHessian);
SHGLM_DEFINE_ERROR(EmptyMask);
SHGLM_DEFINE_ERROR(InvalidShape);
SHGLM_DEFINE_ERROR(RankDeficient);
SHGLM_DEFINE_ERROR(IoError);
SHGLM_DEFINE_ERROR(ConfigError);

#undef SHGLM_DEFINE_ERROR

// Compensated (Kahan) accumulator. Likelihood sums use a fixed row-major
// order with this accumulator so masked and unmasked paths agree bitwise.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

// splitmix64 mix; used to derive independent per-replicate seeds from a
// base seed, so grid points are reproducible in isolation.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 0x632be59bd9b4e019ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

// Worker cap: SHUFFLED_GLM_THREADS when set, hardware concurrency otherwise.
inline int worker_count() {
  static const int cached = [] {
    if (const char* env = std::getenv("SHUFFLED_GLM_THREADS")) {
      const int k = std::atoi(env);
      if (k >= 1) return k;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return cached;
}

// Runs fn(0..count-1) on a small worker pool. Callers must write results
// into per-index slots; the outcome is independent of scheduling.
template <typename Fn>
void parallel_for(int count, Fn&& fn) {
  const int workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      int i;
      while ((i = next.fetch_add(1)) < count) {
        if (failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace shuffled_glm
