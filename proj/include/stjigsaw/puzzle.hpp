#pragma once

#include <cstring>
#include <stdexcept>
#include <vector>

#include "stjigsaw/cube.hpp"
#include "stjigsaw/permute.hpp"
#include "stjigsaw/rng.hpp"

namespace stj {

enum class PuzzleKind { spatial, temporal };

/// A shuffled cube with its position labels. labels[i] is the original
/// position of the element (patch or frame) now at slot i; recovering the
/// labels solves the puzzle.
struct PuzzleSample {
  PuzzleKind kind = PuzzleKind::temporal;
  int grid_n = 0;  // spatial puzzles only
  std::vector<Frame> frames;
  Permutation labels;
};

/// Rearranges the n x n patch grid of a square frame: output grid slot i
/// receives the patch at original slot p[i]. Lossless; inverting with
/// invert(p) restores the frame bit-exactly.
inline Frame permute_patches(const Frame& f, int n, const Permutation& p) {
  if (n < 1 || f.h != f.w || f.h % n != 0)
    throw std::invalid_argument("permute_patches: frame not divisible into n x n grid");
  if (p.k() != n * n) throw std::invalid_argument("permute_patches: permutation size != n^2");
  const int cell = f.h / n;
  Frame out(f.h, f.w, f.c);
  const std::size_t row_bytes = static_cast<std::size_t>(cell) * f.c * sizeof(float);
  for (int slot = 0; slot < n * n; ++slot) {
    const int src = p[slot];
    const int dy = (slot / n) * cell, dx = (slot % n) * cell;
    const int sy = (src / n) * cell, sx = (src % n) * cell;
    for (int y = 0; y < cell; ++y)
      std::memcpy(&out.at(dy + y, dx, 0), &f.at(sy + y, sx, 0), row_bytes);
  }
  return out;
}

/// Largest frame size <= patch that splits into an exact n x n grid.
inline int spatial_frame_size(int patch, int n) { return (patch / n) * n; }

/// Builds a spatial jigsaw: every frame of the cube is split into an n x n
/// grid and rearranged with the same permutation; frames stay in
/// chronological order. When the patch size is not divisible by n the cube
/// is first resampled to the nearest divisible size (64 -> 63 for n = 3) so
/// that all grid cells are exactly equal-sized.
inline PuzzleSample spatial_shuffle(const ObjectCube& cube, const Permutation& p, int n) {
  if (n < 1) throw std::invalid_argument("spatial_shuffle: n must be >= 1");
  if (p.k() != n * n) throw std::invalid_argument("spatial_shuffle: permutation size != n^2");
  if (cube.patches.empty()) throw std::invalid_argument("spatial_shuffle: empty cube");

  const int size = spatial_frame_size(cube.patches[0].h, n);
  if (size < n) throw std::invalid_argument("spatial_shuffle: grid too fine for patch size");

  PuzzleSample s;
  s.kind = PuzzleKind::spatial;
  s.grid_n = n;
  s.labels = p;
  s.frames.reserve(cube.patches.size());
  for (const Frame& f : cube.patches)
    s.frames.push_back(permute_patches(f.h == size ? f : resize(f, size, size), n, p));
  return s;
}

/// Builds a temporal jigsaw: output frame slot i holds cube frame p[i];
/// spatial content is untouched.
inline PuzzleSample temporal_shuffle(const ObjectCube& cube, const Permutation& p) {
  if (p.k() != cube.l())
    throw std::invalid_argument("temporal_shuffle: permutation size != cube length");
  PuzzleSample s;
  s.kind = PuzzleKind::temporal;
  s.labels = p;
  s.frames = stj::apply(p, cube.patches);
  return s;
}

/// The branch decision of the mini-batch construction loop for one cube,
/// before any pixels are touched.
struct PuzzlePlan {
  PuzzleKind kind = PuzzleKind::temporal;
  Permutation perm;
};

/// Draws one puzzle plan: with probability r the puzzle is spatial (and the
/// identity permutation is used when the same draw falls below zeta),
/// otherwise temporal with a uniform permutation. The caller is responsible
/// for dropping temporal plans on static cubes.
inline PuzzlePlan sample_plan(Rng& rng, double r, double zeta, int l, int n) {
  if (!(0.0 <= zeta && zeta <= r && r <= 1.0))
    throw std::invalid_argument("sample_plan: need 0 <= zeta <= r <= 1");
  PuzzlePlan plan;
  const double u = uniform_real01(rng);
  if (u <= r) {
    plan.kind = PuzzleKind::spatial;
    plan.perm = (u <= zeta) ? identity(n * n) : sample_uniform(n * n, rng);
  } else {
    plan.kind = PuzzleKind::temporal;
    plan.perm = sample_uniform(l, rng);
  }
  return plan;
}

struct PuzzleBatch {
  std::vector<PuzzleSample> temporal;
  std::vector<PuzzleSample> spatial;
  int static_dropped = 0;
  int identity_spatial = 0;
};

/// Mini-batch puzzle construction: routes each cube to the spatial or
/// temporal branch by an independent uniform draw. Static cubes routed to
/// the temporal branch are dropped (their order is unrecoverable), so
/// |temporal| + |spatial| <= |cubes|.
inline PuzzleBatch build_batch(const std::vector<ObjectCube>& cubes, double r, double zeta,
                               int l, int n, Rng& rng, double static_eps = 0.005) {
  PuzzleBatch batch;
  for (const ObjectCube& cube : cubes) {
    if (cube.l() != l) throw std::invalid_argument("build_batch: cube length != l");
    const double u = uniform_real01(rng);
    if (u <= r) {
      Permutation p = (u <= zeta) ? identity(n * n) : sample_uniform(n * n, rng);
      if (p == identity(n * n)) ++batch.identity_spatial;
      batch.spatial.push_back(spatial_shuffle(cube, p, n));
    } else {
      if (is_static(cube, static_eps)) {
        ++batch.static_dropped;
        continue;
      }
      batch.temporal.push_back(temporal_shuffle(cube, sample_uniform(l, rng)));
    }
  }
  return batch;
}

}  // namespace stj
