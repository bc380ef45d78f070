#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vlselect/embedding.hpp"

namespace vlselect {

// Exact inner-product search over a normalized matrix.
//
// Every ordering in this module is the lexicographic order on
// (score descending, row ascending), which makes rankings total and
// reproducible even with duplicate rows.
class Index {
 public:
  // Throws PreconditionError unless matrix.normalized() and the id count
  // matches the row count.
  Index(EmbeddingMatrix matrix, std::vector<std::string> row_ids);

  std::size_t size() const noexcept { return matrix_.count(); }
  std::size_t dim() const noexcept { return matrix_.dim(); }
  Space space() const noexcept { return matrix_.space(); }
  const EmbeddingMatrix& matrix() const noexcept { return matrix_; }
  const std::vector<std::string>& row_ids() const noexcept { return row_ids_; }
  const std::string& id(std::size_t row) const { return row_ids_.at(row); }

 private:
  EmbeddingMatrix matrix_;
  std::vector<std::string> row_ids_;
};

Index build_index(EmbeddingMatrix matrix, std::vector<std::string> row_ids);

struct Neighbor {
  std::size_t row = 0;
  std::string id;
  double score = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// True when (score_a, row_a) ranks strictly ahead of (score_b, row_b).
inline bool ranks_before(double score_a, std::size_t row_a, double score_b, std::size_t row_b) {
  return score_a > score_b || (score_a == score_b && row_a < row_b);
}

// Inner product of the query against every row. Throws
// DimensionMismatchError, or PreconditionError for a non-unit query.
std::vector<double> score_all(const Index& index, std::span<const float> query);

// The min(k, size) best rows, best first.
std::vector<Neighbor> query_topk(const Index& index, std::span<const float> query, std::size_t k);

// Runs query_topk for every row of `queries` in parallel; result i belongs to
// query row i and matches the sequential answer exactly.
std::vector<std::vector<Neighbor>> query_topk_batch(const Index& index,
                                                    const EmbeddingMatrix& queries, std::size_t k,
                                                    unsigned threads = 0);

// All rows, best first.
std::vector<std::size_t> full_ranking(const Index& index, std::span<const float> query);

// 1-based position of target_row in full_ranking(index, query), computed in
// one streaming pass without materializing the ranking. Throws IndexError.
std::size_t rank_of(const Index& index, std::span<const float> query, std::size_t target_row);

}  // namespace vlselect
