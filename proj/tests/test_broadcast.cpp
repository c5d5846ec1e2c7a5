#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "test_support.hpp"

#include "cwerm/broadcast.hpp"

using namespace cwerm;

namespace {

CoresetWeights weights_for(const CoresetSelection& sel, std::vector<double> w) {
  CoresetWeights cw;
  cw.indices = sel.indices;
  cw.weights = std::move(w);
  return cw;
}

CoresetSelection random_selection(Rng& rng, std::size_t n) {
  CoresetSelection sel;
  const std::size_t k = 1 + rng.uniform_index(n);
  sel.indices = rng.sample_without_replacement(n, k);
  std::sort(sel.indices.begin(), sel.indices.end());
  sel.ratio = static_cast<double>(k) / n;
  return sel;
}

std::vector<double> random_weights(Rng& rng, std::size_t k) {
  std::vector<double> w(k);
  for (auto& v : w) v = rng.uniform(0.0, 2.0);
  return w;
}

}  // namespace

TEST_CASE("full selection copies weights through") {
  Rng rng(1);
  const Matrix x = testing::random_matrix(rng, 12, 3);
  CoresetSelection sel;
  sel.indices.resize(12);
  std::iota(sel.indices.begin(), sel.indices.end(), 0);
  const auto w = random_weights(rng, 12);
  const auto b = broadcast_weights(x, sel, weights_for(sel, w));
  CHECK(b.w_star == w);
  CHECK(b.source_index == sel.indices);
  CHECK(b.space == "featurized");
}

TEST_CASE("one-dimensional hand example") {
  const Matrix x(3, 1, {0.0, 0.9, 2.0});
  CoresetSelection sel;
  sel.indices = {0, 2};
  const auto b = broadcast_weights(x, sel, weights_for(sel, {0.5, 1.5}));
  CHECK(b.w_star == std::vector<double>{0.5, 0.5, 1.5});
  CHECK(b.source_index == std::vector<std::size_t>{0, 0, 2});
}

TEST_CASE("coreset members inherit their own weight") {
  Rng rng(2);
  const Matrix x = testing::random_matrix(rng, 40, 4);
  const auto sel = random_selection(rng, 40);
  const auto w = random_weights(rng, sel.size());
  const auto b = broadcast_weights(x, sel, weights_for(sel, w));
  for (std::size_t j = 0; j < sel.size(); ++j) {
    CHECK(b.w_star[sel.indices[j]] == w[j]);
    CHECK(b.source_index[sel.indices[j]] == sel.indices[j]);
  }
}

TEST_CASE("duplicate coreset rows still carry a coreset weight") {
  Matrix x(4, 1, {1.0, 1.0, 5.0, 1.0});
  CoresetSelection sel;
  sel.indices = {0, 1, 2};
  const auto b = broadcast_weights(x, sel, weights_for(sel, {0.25, 0.75, 2.0}));
  CHECK(b.source_index[1] == 0);  // lowest-index tie
  CHECK(b.w_star[1] == 0.25);
  CHECK(b.w_star[3] == 0.25);
}

TEST_CASE("broadcast matches a double-loop Voronoi oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(60);
    const std::size_t d = 1 + rng.uniform_index(5);
    const Matrix x = testing::random_matrix(rng, n, d);
    const auto sel = random_selection(rng, n);
    const auto w = random_weights(rng, sel.size());
    const auto b = broadcast_weights(x, sel, weights_for(sel, w));
    std::set<double> distinct;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = INFINITY;
      for (std::size_t j = 0; j < sel.size(); ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = x(i, c) - x(sel.indices[j], c);
          s += diff * diff;
        }
        if (s < best_d) {
          best_d = s;
          best = j;
        }
      }
      CHECK(b.source_index[i] == sel.indices[best]);
      CHECK(b.w_star[i] == w[best]);
      distinct.insert(b.w_star[i]);
    }
    CHECK(distinct.size() <= sel.size());
  }
}

TEST_CASE("re-broadcasting the coreset restriction is idempotent") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(50);
    const Matrix x = testing::random_matrix(rng, n, 3);
    const auto sel = random_selection(rng, n);
    const auto first = broadcast_weights(x, sel, weights_for(sel, random_weights(rng, sel.size())));
    std::vector<double> restricted;
    for (const auto i : sel.indices) restricted.push_back(first.w_star[i]);
    const auto second = broadcast_weights(x, sel, weights_for(sel, restricted));
    CHECK(second.w_star == first.w_star);
    CHECK(second.source_index == first.source_index);
  }
}

TEST_CASE("source index is invariant under a common rotation") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 5 + rng.uniform_index(40);
    const std::size_t d = 2 + rng.uniform_index(4);
    const Matrix x = testing::random_matrix(rng, n, d);
    const auto sel = random_selection(rng, n);
    const auto cw = weights_for(sel, random_weights(rng, sel.size()));
    const auto base = broadcast_weights(x, sel, cw);
    const Matrix rotated = testing::rotate(x, testing::random_orthogonal(rng, d));
    const auto moved = broadcast_weights(rotated, sel, cw);
    for (std::size_t i = 0; i < n; ++i) {
      // Skip rows whose two nearest coreset members are within 1e-9.
      std::vector<double> dist;
      for (const auto j : sel.indices) dist.push_back(std::sqrt(squared_distance(x.row(i), x.row(j))));
      std::sort(dist.begin(), dist.end());
      if (dist.size() > 1 && dist[1] - dist[0] <= 1e-9) continue;
      CHECK(moved.source_index[i] == base.source_index[i]);
    }
  }
}

TEST_CASE("broadcast errors") {
  const Matrix x(3, 1, {0.0, 1.0, 2.0});
  CoresetSelection empty;
  CHECK_THROWS_AS(broadcast_weights(x, empty, CoresetWeights{}), Error);
  CoresetSelection sel;
  sel.indices = {0, 2};
  try {
    broadcast_weights(x, sel, weights_for(sel, {1.0}));
    FAIL("expected misalignment");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDimensionMismatch);
  }
}

TEST_CASE("weights CSV round trip") {
  testing::TempDir dir("bcast");
  const Matrix x(4, 1, {0.0, 0.9, 2.0, 3.3});
  CoresetSelection sel;
  sel.indices = {0, 2};
  const auto b = broadcast_weights(x, sel, weights_for(sel, {0.1, 1.9}));
  const std::vector<SampleId> ids = {10, 11, 12, 13};
  write_weights_csv(b, ids, dir.file("w.csv"));
  const auto table = read_weights_csv(dir.file("w.csv"));
  CHECK(table.ids == ids);
  CHECK(table.weights == b.w_star);
  CHECK(table.source_index == b.source_index);

  testing::write_file(dir.file("bad.csv"), "id,w\n");
  CHECK_THROWS_AS(read_weights_csv(dir.file("bad.csv")), Error);
  CHECK_THROWS_AS(write_weights_csv(b, std::vector<SampleId>{1}, dir.file("x.csv")), Error);
}
