#include "vlselect/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vlselect/errors.hpp"
#include "vlselect/parallel.hpp"

namespace vlselect {

Index::Index(EmbeddingMatrix matrix, std::vector<std::string> row_ids)
    : matrix_(std::move(matrix)), row_ids_(std::move(row_ids)) {
  if (!matrix_.normalized()) throw PreconditionError("index requires a normalized matrix");
  if (row_ids_.size() != matrix_.count()) {
    throw PreconditionError("index has " + std::to_string(matrix_.count()) + " rows but " +
                            std::to_string(row_ids_.size()) + " ids");
  }
}

Index build_index(EmbeddingMatrix matrix, std::vector<std::string> row_ids) {
  return Index(std::move(matrix), std::move(row_ids));
}

namespace {

void check_query(const Index& index, std::span<const float> query) {
  if (query.size() != index.dim()) {
    throw DimensionMismatchError("query has dimension " + std::to_string(query.size()) +
                                 ", index has " + std::to_string(index.dim()));
  }
  const double norm = row_norm(query);
  if (std::abs(norm - 1.0) > kUnitNormTolerance) {
    throw PreconditionError("query is not unit-normalized (norm " + std::to_string(norm) + ")");
  }
}

void score_rows(const EmbeddingMatrix& m, std::span<const float> query, std::size_t begin,
                std::size_t end, double* out) {
  for (std::size_t i = begin; i < end; ++i) out[i] = dot(m.row(i), query);
}

std::vector<std::size_t> top_rows(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> rows(scores.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  k = std::min(k, rows.size());
  auto before = [&](std::size_t a, std::size_t b) { return ranks_before(scores[a], a, scores[b], b); };
  if (k < rows.size()) {
    std::nth_element(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end(), before);
    rows.resize(k);
  }
  std::sort(rows.begin(), rows.end(), before);
  return rows;
}

std::vector<Neighbor> topk_unchecked(const Index& index, std::span<const float> query, std::size_t k) {
  std::vector<double> scores(index.size());
  score_rows(index.matrix(), query, 0, index.size(), scores.data());
  std::vector<Neighbor> out;
  for (std::size_t row : top_rows(scores, k)) out.push_back({row, index.id(row), scores[row]});
  return out;
}

}  // namespace

std::vector<double> score_all(const Index& index, std::span<const float> query) {
  check_query(index, query);
  std::vector<double> scores(index.size());
  score_rows(index.matrix(), query, 0, index.size(), scores.data());
  return scores;
}

std::vector<Neighbor> query_topk(const Index& index, std::span<const float> query, std::size_t k) {
  check_query(index, query);
  return topk_unchecked(index, query, k);
}

std::vector<std::vector<Neighbor>> query_topk_batch(const Index& index,
                                                    const EmbeddingMatrix& queries, std::size_t k,
                                                    unsigned threads) {
  for (std::size_t q = 0; q < queries.count(); ++q) check_query(index, queries.row(q));
  std::vector<std::vector<Neighbor>> out(queries.count());
  parallel_for_chunks(queries.count(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t q = begin; q < end; ++q) out[q] = topk_unchecked(index, queries.row(q), k);
  });
  return out;
}

std::vector<std::size_t> full_ranking(const Index& index, std::span<const float> query) {
  return top_rows(score_all(index, query), index.size());
}

std::size_t rank_of(const Index& index, std::span<const float> query, std::size_t target_row) {
  check_query(index, query);
  if (target_row >= index.size()) {
    throw IndexError("row " + std::to_string(target_row) + " out of range for index of size " +
                     std::to_string(index.size()));
  }
  const auto& m = index.matrix();
  const double target = dot(m.row(target_row), query);
  std::size_t ahead = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (ranks_before(dot(m.row(i), query), i, target, target_row)) ++ahead;
  }
  return ahead + 1;
}

}  // namespace vlselect
