#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "test_util.hpp"
#include "vlselect/errors.hpp"
#include "vlselect/knn.hpp"

namespace vlselect {
namespace {

using testing::make_ids;
using testing::random_unit_matrix;

// Brute-force reference: score every row in double, stable sort.
std::vector<std::size_t> oracle_ranking(const EmbeddingMatrix& m, std::span<const float> q) {
  std::vector<double> s(m.count());
  for (std::size_t i = 0; i < m.count(); ++i) {
    double acc = 0;
    for (std::size_t d = 0; d < m.dim(); ++d) acc += double(m.row(i)[d]) * double(q[d]);
    s[i] = acc;
  }
  std::vector<std::size_t> order(m.count());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  return order;
}

TEST(Knn, MatchesBruteForceOracle) {
  const auto pool = random_unit_matrix(200, 32, 11);
  const auto queries = random_unit_matrix(50, 32, 12);
  const auto index = build_index(pool, make_ids(200));
  for (std::size_t qi = 0; qi < queries.count(); ++qi) {
    const auto expected = oracle_ranking(pool, queries.row(qi));
    const auto top = query_topk(index, queries.row(qi), 10);
    ASSERT_EQ(top.size(), 10u);
    for (std::size_t j = 0; j < 10; ++j) {
      EXPECT_EQ(top[j].row, expected[j]);
      EXPECT_EQ(top[j].id, "p" + std::to_string(expected[j]));
    }
    EXPECT_EQ(full_ranking(index, queries.row(qi)), expected);
  }
}

TEST(Knn, KIsClampedToPoolSize) {
  const auto index = build_index(random_unit_matrix(5, 4, 1), make_ids(5));
  const auto q = random_unit_matrix(1, 4, 2);
  EXPECT_EQ(query_topk(index, q.row(0), 100).size(), 5u);
  EXPECT_TRUE(query_topk(index, q.row(0), 0).empty());
}

TEST(Knn, SelfIsTopOne) {
  const auto pool = random_unit_matrix(100, 16, 3);
  const auto index = build_index(pool, make_ids(100));
  for (std::size_t i = 0; i < pool.count(); ++i) {
    const auto top = query_topk(index, pool.row(i), 1);
    EXPECT_EQ(top[0].row, i);
    EXPECT_EQ(rank_of(index, pool.row(i), i), 1u);
  }
}

TEST(Knn, DuplicateRowsTieBreakByRow) {
  auto pool = random_unit_matrix(10, 8, 4);
  std::copy(pool.row(2).begin(), pool.row(2).end(), pool.row(7).begin());
  const auto index = build_index(pool, make_ids(10));
  const auto top = query_topk(index, pool.row(7), 2);
  EXPECT_EQ(top[0].row, 2u);
  EXPECT_EQ(top[1].row, 7u);
  EXPECT_EQ(top[0].score, top[1].score);
  EXPECT_EQ(rank_of(index, pool.row(7), 7), 2u);
  EXPECT_EQ(rank_of(index, pool.row(7), 2), 1u);
}

TEST(Knn, TopkIsPrefixOfFullRanking) {
  const auto pool = random_unit_matrix(300, 12, 5);
  const auto q = random_unit_matrix(1, 12, 6);
  const auto index = build_index(pool, make_ids(300));
  const auto full = full_ranking(index, q.row(0));
  for (std::size_t k : {1, 7, 32, 299, 300}) {
    const auto top = query_topk(index, q.row(0), k);
    for (std::size_t j = 0; j < k; ++j) EXPECT_EQ(top[j].row, full[j]);
  }
}

TEST(Knn, RankOfAgreesWithFullRanking) {
  const auto pool = random_unit_matrix(150, 10, 7);
  const auto q = random_unit_matrix(1, 10, 8);
  const auto index = build_index(pool, make_ids(150));
  const auto full = full_ranking(index, q.row(0));
  for (std::size_t pos = 0; pos < full.size(); ++pos) {
    EXPECT_EQ(rank_of(index, q.row(0), full[pos]), pos + 1);
  }
  EXPECT_THROW(rank_of(index, q.row(0), 150), IndexError);
}

TEST(Knn, BatchEqualsSequential) {
  const auto pool = random_unit_matrix(400, 24, 9);
  const auto queries = random_unit_matrix(33, 24, 10);
  const auto index = build_index(pool, make_ids(400));
  for (unsigned threads : {1u, 3u, 8u}) {
    const auto batch = query_topk_batch(index, queries, 17, threads);
    ASSERT_EQ(batch.size(), queries.count());
    for (std::size_t i = 0; i < queries.count(); ++i) {
      EXPECT_EQ(batch[i], query_topk(index, queries.row(i), 17));
    }
  }
}

TEST(Knn, Preconditions) {
  auto raw = random_unit_matrix(4, 3, 1);
  raw.set_normalized(false);
  EXPECT_THROW(build_index(raw, make_ids(4)), PreconditionError);
  EXPECT_THROW(build_index(random_unit_matrix(4, 3, 1), make_ids(3)), PreconditionError);

  const auto index = build_index(random_unit_matrix(4, 3, 1), make_ids(4));
  std::vector<float> wrong_dim{1, 0};
  EXPECT_THROW(query_topk(index, wrong_dim, 1), DimensionMismatchError);
  std::vector<float> not_unit{2, 0, 0};
  EXPECT_THROW(query_topk(index, not_unit, 1), PreconditionError);
}

TEST(Knn, EmptyIndex) {
  const auto index = build_index(EmbeddingMatrix(0, 3, Space::Concept, true), {});
  std::vector<float> q{1, 0, 0};
  EXPECT_TRUE(query_topk(index, q, 5).empty());
  EXPECT_TRUE(full_ranking(index, q).empty());
}

}  // namespace
}  // namespace vlselect
