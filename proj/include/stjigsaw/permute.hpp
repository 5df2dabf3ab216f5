#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stjigsaw/rng.hpp"

namespace stj {

/// A permutation of {0, .., k-1}. elems[i] is the element placed at slot i;
/// applied to a sequence, output slot i receives input element elems[i].
struct Permutation {
  std::vector<int> elems;

  Permutation() = default;
  explicit Permutation(std::vector<int> e) : elems(std::move(e)) {}

  int k() const { return static_cast<int>(elems.size()); }
  int operator[](int i) const { return elems[static_cast<std::size_t>(i)]; }

  bool operator==(const Permutation& o) const = default;

  /// True iff elems is a bijection on {0, .., k-1}.
  bool valid() const {
    std::vector<bool> seen(elems.size(), false);
    for (int e : elems) {
      if (e < 0 || e >= k() || seen[static_cast<std::size_t>(e)]) return false;
      seen[static_cast<std::size_t>(e)] = true;
    }
    return true;
  }
};

/// k! as a 64-bit integer; defined for k <= 20.
inline std::uint64_t factorial(int k) {
  if (k < 0 || k > 20) throw std::invalid_argument("factorial: k must be in [0, 20]");
  std::uint64_t f = 1;
  for (int i = 2; i <= k; ++i) f *= static_cast<std::uint64_t>(i);
  return f;
}

inline Permutation identity(int k) {
  if (k < 1) throw std::invalid_argument("identity: k must be >= 1");
  std::vector<int> e(static_cast<std::size_t>(k));
  std::iota(e.begin(), e.end(), 0);
  return Permutation{std::move(e)};
}

/// Lexicographic rank in [0, k!); the identity has rank 0.
inline std::uint64_t rank(const Permutation& p) {
  const int k = p.k();
  if (k < 1 || !p.valid()) throw std::invalid_argument("rank: not a valid permutation");
  std::uint64_t r = 0;
  for (int i = 0; i < k; ++i) {
    int smaller = 0;
    for (int j = i + 1; j < k; ++j)
      if (p[j] < p[i]) ++smaller;
    r += static_cast<std::uint64_t>(smaller) * factorial(k - 1 - i);
  }
  return r;
}

/// Inverse of rank(): the permutation of k elements with lexicographic rank r.
inline Permutation unrank(int k, std::uint64_t r) {
  if (k < 1) throw std::invalid_argument("unrank: k must be >= 1");
  if (r >= factorial(k)) throw std::out_of_range("unrank: rank out of range");
  std::vector<int> pool(static_cast<std::size_t>(k));
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<int> e;
  e.reserve(static_cast<std::size_t>(k));
  for (int i = k - 1; i >= 0; --i) {
    const std::uint64_t f = factorial(i);
    const std::size_t idx = static_cast<std::size_t>(r / f);
    r %= f;
    e.push_back(pool[idx]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  return Permutation{std::move(e)};
}

/// Uniform draw over all k! permutations by in-place shuffling; never
/// enumerates the permutation set.
inline Permutation sample_uniform(int k, Rng& rng) {
  Permutation p = identity(k);
  shuffle(p.elems, rng);
  return p;
}

/// Applies p to a sequence: output slot i holds seq[p.elems[i]].
template <typename T>
std::vector<T> apply(const Permutation& p, std::span<const T> seq) {
  if (static_cast<int>(seq.size()) != p.k())
    throw std::invalid_argument("apply: sequence length does not match permutation");
  std::vector<T> out;
  out.reserve(seq.size());
  for (int i = 0; i < p.k(); ++i) out.push_back(seq[static_cast<std::size_t>(p[i])]);
  return out;
}

template <typename T>
std::vector<T> apply(const Permutation& p, const std::vector<T>& seq) {
  return apply(p, std::span<const T>(seq));
}

/// Inverse permutation: apply(invert(p), apply(p, s)) == s.
inline Permutation invert(const Permutation& p) {
  if (!p.valid()) throw std::invalid_argument("invert: not a valid permutation");
  std::vector<int> inv(p.elems.size());
  for (int i = 0; i < p.k(); ++i) inv[static_cast<std::size_t>(p[i])] = i;
  return Permutation{std::move(inv)};
}

/// Element-wise Hamming distance between two permutations of equal length.
inline int hamming(const Permutation& a, const Permutation& b) {
  if (a.k() != b.k()) throw std::invalid_argument("hamming: length mismatch");
  int d = 0;
  for (int i = 0; i < a.k(); ++i)
    if (a[i] != b[i]) ++d;
  return d;
}

/// Greedy max-min Hamming subset selection: starts from a random permutation
/// and repeatedly adds the candidate whose minimum distance to the chosen set
/// is largest. When k! exceeds pool_size the candidate set is a uniform
/// sample of pool_size draws instead of the full enumeration.
inline std::vector<Permutation> select_hamming_subset(int k, int m, Rng& rng,
                                                      std::uint64_t pool_size = 10000) {
  if (k < 1) throw std::invalid_argument("select_hamming_subset: k must be >= 1");
  const std::uint64_t total = factorial(k);
  if (m < 1 || static_cast<std::uint64_t>(m) > total)
    throw std::invalid_argument("select_hamming_subset: m must be in [1, k!]");

  std::vector<Permutation> pool;
  if (total <= pool_size) {
    pool.reserve(static_cast<std::size_t>(total));
    for (std::uint64_t r = 0; r < total; ++r) pool.push_back(unrank(k, r));
  } else {
    pool.reserve(static_cast<std::size_t>(pool_size));
    for (std::uint64_t i = 0; i < pool_size; ++i) pool.push_back(sample_uniform(k, rng));
  }

  std::vector<Permutation> chosen;
  chosen.push_back(pool[static_cast<std::size_t>(uniform_index(rng, pool.size()))]);

  // min_dist[i] tracks the distance from pool[i] to the chosen set.
  std::vector<int> min_dist(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) min_dist[i] = hamming(pool[i], chosen[0]);

  while (static_cast<int>(chosen.size()) < m) {
    std::size_t best = 0;
    int best_dist = -1;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (min_dist[i] > best_dist) {
        best_dist = min_dist[i];
        best = i;
      }
    }
    if (best_dist <= 0) {
      // Sampled pool exhausted (duplicates only); top up with fresh draws.
      for (;;) {
        Permutation cand = sample_uniform(k, rng);
        int d = cand.k();
        for (const Permutation& c : chosen) d = std::min(d, hamming(cand, c));
        if (d > 0) {
          chosen.push_back(std::move(cand));
          break;
        }
      }
      for (std::size_t i = 0; i < pool.size(); ++i)
        min_dist[i] = std::min(min_dist[i], hamming(pool[i], chosen.back()));
      continue;
    }
    chosen.push_back(pool[best]);
    for (std::size_t i = 0; i < pool.size(); ++i)
      min_dist[i] = std::min(min_dist[i], hamming(pool[i], chosen.back()));
  }
  return chosen;
}

/// One permutation per line, space-separated integers.
inline void write_permutations(std::ostream& os, const std::vector<Permutation>& ps) {
  for (const Permutation& p : ps) {
    for (int i = 0; i < p.k(); ++i) {
      if (i) os << ' ';
      os << p[i];
    }
    os << '\n';
  }
}

inline std::vector<Permutation> read_permutations(std::istream& is) {
  std::vector<Permutation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<int> e;
    int v;
    while (ss >> v) e.push_back(v);
    Permutation p{std::move(e)};
    if (!p.valid())
      throw std::invalid_argument("permutation file line " + std::to_string(line_no) +
                                  ": not a permutation");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace stj
