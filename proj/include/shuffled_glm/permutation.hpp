// Index-map permutations: metrics, algebra, and controlled random draws.
#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "shuffled_glm/common.hpp"

namespace shuffled_glm {

// Bijection on {0..n-1}. map()[i] is the image of index i. Viewed as the
// row-permutation matrix P with P[i, map(i)] = 1, so that
// apply_rows(perm, M) computes P*M, i.e. row i of the result is row
// map(i) of M.
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(std::vector<int> map) : map_(std::move(map)) {
    std::vector<int> sorted = map_;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < static_cast<int>(sorted.size()); ++i) {
      if (sorted[i] != i) throw DomainError("Permutation: map is not a bijection on {0..n-1}");
    }
  }

  static Permutation identity(int n) {
    if (n < 1) throw DomainError("Permutation::identity: n must be >= 1");
    std::vector<int> map(n);
    std::iota(map.begin(), map.end(), 0);
    return Permutation(std::move(map));
  }

  int size() const { return static_cast<int>(map_.size()); }
  int operator()(int i) const { return map_[i]; }
  const std::vector<int>& map() const { return map_; }

  bool is_identity() const {
    for (int i = 0; i < size(); ++i)
      if (map_[i] != i) return false;
    return true;
  }

  Permutation inverse() const {
    std::vector<int> inv(map_.size());
    for (int i = 0; i < size(); ++i) inv[map_[i]] = i;
    return Permutation(std::move(inv));
  }

  friend bool operator==(const Permutation& a, const Permutation& b) {
    return a.map_ == b.map_;
  }
  friend bool operator!=(const Permutation& a, const Permutation& b) {
    return !(a == b);
  }

 private:
  std::vector<int> map_;
};

inline int hamming(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size()) throw LengthMismatch("hamming: permutations have different lengths");
  int d = 0;
  for (int i = 0; i < a.size(); ++i) d += a(i) != b(i);
  return d;
}

// compose(a, b) applies b first in matrix form: as matrices P_a * P_b, so
// apply_rows(compose(a, b), M) == apply_rows(a, apply_rows(b, M)).
inline Permutation compose(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size()) throw LengthMismatch("compose: permutations have different lengths");
  std::vector<int> map(a.size());
  for (int i = 0; i < a.size(); ++i) map[i] = b(a(i));
  return Permutation(std::move(map));
}

inline Matrix apply_rows(const Permutation& perm, const Matrix& M) {
  if (perm.size() != M.rows()) throw LengthMismatch("apply_rows: permutation length != row count");
  Matrix out(M.rows(), M.cols());
  for (int i = 0; i < perm.size(); ++i) out.row(i) = M.row(perm(i));
  return out;
}

inline Vector apply_rows(const Permutation& perm, const Vector& v) {
  if (perm.size() != v.size()) throw LengthMismatch("apply_rows: permutation length != vector length");
  Vector out(v.size());
  for (int i = 0; i < perm.size(); ++i) out[i] = v[perm(i)];
  return out;
}

inline Matrix to_matrix(const Permutation& perm) {
  Matrix P = Matrix::Zero(perm.size(), perm.size());
  for (int i = 0; i < perm.size(); ++i) P(i, perm(i)) = 1.0;
  return P;
}

// Draws a permutation at Hamming distance exactly h from identity: h
// positions chosen uniformly, carrying a uniform derangement (sampled by
// rejection; expected < e redraws). h = 1 is impossible and rejected.
inline Permutation random_with_displacement(int n, int h, std::uint64_t rng_seed) {
  if (n < 1) throw DomainError("random_with_displacement: n must be >= 1");
  if (h == 1 || h < 0 || h > n)
    throw InvalidDisplacement("random_with_displacement: h must be 0 or in [2, n]");
  std::vector<int> map(n);
  std::iota(map.begin(), map.end(), 0);
  if (h == 0) return Permutation(std::move(map));

  std::mt19937_64 rng(rng_seed);
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int k = 0; k < h; ++k) {
    std::uniform_int_distribution<int> pick(k, n - 1);
    std::swap(pool[k], pool[pick(rng)]);
  }
  std::vector<int> positions(pool.begin(), pool.begin() + h);
  std::sort(positions.begin(), positions.end());

  std::vector<int> values = positions;
  bool deranged = false;
  while (!deranged) {
    std::shuffle(values.begin(), values.end(), rng);
    deranged = true;
    for (int k = 0; k < h; ++k) {
      if (values[k] == positions[k]) {
        deranged = false;
        break;
      }
    }
  }
  for (int k = 0; k < h; ++k) map[positions[k]] = values[k];
  return Permutation(std::move(map));
}

}  // namespace shuffled_glm
