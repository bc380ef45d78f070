#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vlselect/corpus.hpp"
#include "vlselect/knn.hpp"

namespace vlselect {

enum class Alignment { ConceptDriven, SkillDriven, Indeterminate };

std::string_view to_string(Alignment a);
std::optional<Alignment> parse_alignment(std::string_view text);

// Where one space's best pool match lands in the other space's ranking.
struct CrossRankSample {
  std::string benchmark_id;
  std::size_t r_c_given_s = 0;  // concept rank of the top-1 skill neighbor
  std::size_t r_s_given_c = 0;  // skill rank of the top-1 concept neighbor
  std::string top1_skill_id;
  std::string top1_concept_id;

  friend bool operator==(const CrossRankSample&, const CrossRankSample&) = default;
};

struct CrossRankReport {
  std::string benchmark_name;
  double mean_r_c_given_s = 0.0;
  double mean_r_s_given_c = 0.0;
  double rank_diff = 0.0;  // mean_r_s_given_c - mean_r_c_given_s
  Alignment predicted = Alignment::Indeterminate;
  std::size_t sample_count = 0;
  std::vector<CrossRankSample> samples;
};

enum class RankAggregate { Mean, Median };

struct CrossRankOptions {
  double tau = 0.0;  // |rank_diff| must exceed tau for a non-Indeterminate call
  // Default: rank_diff < -tau is SkillDriven, > tau ConceptDriven.
  // flip_sign swaps the two labels.
  bool flip_sign = false;
  RankAggregate aggregate = RankAggregate::Mean;
  unsigned threads = 0;
};

// Throws PoolMismatchError if the two indexes do not share row ids.
CrossRankSample cross_ranks_for_sample(const Index& concept_index, const Index& skill_index,
                                       std::span<const float> concept_query,
                                       std::span<const float> skill_query);

Alignment predict_alignment(double rank_diff, const CrossRankOptions& options = {});

// Per-benchmark-row cross ranks, aggregated. Throws MissingSpaceError if
// either corpus lacks a space.
CrossRankReport benchmark_cross_rank(const Corpus& pool, const Corpus& benchmark,
                                     const CrossRankOptions& options = {});

// Same, reusing prebuilt indexes over the pool.
CrossRankReport benchmark_cross_rank(const Index& concept_index, const Index& skill_index,
                                     const Corpus& benchmark, const CrossRankOptions& options = {});

// Recommended selection strategy for a predicted alignment, if any.
std::optional<std::string> recommended_strategy(Alignment a);

struct ScatterRow {
  std::string benchmark;
  double mean_r_c_given_s = 0.0;
  double mean_r_s_given_c = 0.0;
  double rank_diff = 0.0;
  Alignment predicted = Alignment::Indeterminate;
  std::optional<double> perf_diff;
};

// CSV columns: benchmark,mean_r_c_given_s,mean_r_s_given_c,rank_diff,predicted,perf_diff
// outcomes, when given, is aligned with reports.
void export_scatter(const std::vector<CrossRankReport>& reports,
                    const std::optional<std::vector<std::optional<double>>>& outcomes,
                    const std::filesystem::path& path);
std::string format_scatter(const std::vector<CrossRankReport>& reports,
                           const std::optional<std::vector<std::optional<double>>>& outcomes);
std::vector<ScatterRow> parse_scatter(std::string_view csv);

// One JSON object per report (without per-sample detail).
std::string format_report_jsonl(const std::vector<CrossRankReport>& reports);
std::vector<CrossRankReport> parse_report_jsonl(std::string_view text);

}  // namespace vlselect
