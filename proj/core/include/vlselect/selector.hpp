#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlselect/embedding.hpp"
#include "vlselect/knn.hpp"

namespace vlselect {

struct Budget {
  double fraction = 1.0;
  std::size_t resolved_count = 1;

  friend bool operator==(const Budget&, const Budget&) = default;
};

// resolved_count = floor(fraction * pool_count), at least 1. A product that
// lands within 1e-9 below an integer is treated as that integer, so
// 0.29 * 100 gives 29 rather than 28. Throws PreconditionError unless
// 0 < fraction <= 1 and pool_count > 0.
Budget resolve_budget(double fraction, std::size_t pool_count);

enum class Aggregator { MaxOverQueries, MeanOverQueries };

struct RelevanceScores {
  Space space = Space::Concept;
  Aggregator aggregator = Aggregator::MaxOverQueries;
  std::vector<double> values;  // one per pool row
};

// values[i] = aggregate over benchmark queries q of dot(pool_i, q).
// Throws SpaceMismatchError when `space`, the index and the queries disagree,
// EmptyBenchmarkError for zero queries.
RelevanceScores relevance_scores(const Index& pool, const EmbeddingMatrix& queries, Space space,
                                 Aggregator aggregator = Aggregator::MaxOverQueries,
                                 unsigned threads = 0);

enum class Strategy { ConceptUp, SkillUp, Random, HybridSum, HybridMax, HybridSplit };
enum class TargetMode { RoundRobin, AggregateScore };
enum class HybridMode { Sum, Max, Split };
enum class Source { Concept, Skill, Random };

std::string_view to_string(Strategy s);
std::string_view to_string(TargetMode m);
std::string_view to_string(HybridMode m);
std::string_view to_string(Source s);
std::optional<Strategy> parse_strategy(std::string_view text);
std::optional<TargetMode> parse_target_mode(std::string_view text);
std::optional<HybridMode> parse_hybrid_mode(std::string_view text);

struct SelectionEntry {
  std::string id;
  std::size_t row = 0;  // pool row; not serialized
  double score = 0.0;
  Source source = Source::Concept;
  std::size_t rank = 0;  // 1-based position in the manifest
};

struct SelectionManifest {
  Strategy strategy = Strategy::ConceptUp;
  std::string mode;  // round_robin / aggregate / sum / max / split, empty for random
  Budget budget;
  std::optional<std::uint64_t> seed;
  std::vector<SelectionEntry> entries;
  std::string config_digest;  // 16 hex digits over every selection input
};

// Concept-up or skill-up selection depending on the index space.
//
// RoundRobin cycles through the benchmark queries; each turn the query adds
// its closest pool row not yet selected. AggregateScore takes the top rows by
// MaxOverQueries relevance. Entries come out ordered by score (descending,
// pool row ascending); the score of a round-robin entry is its similarity
// to the query that claimed it.
SelectionManifest select_targeted(const Index& pool, const EmbeddingMatrix& queries,
                                  const Budget& budget, TargetMode mode = TargetMode::RoundRobin,
                                  unsigned threads = 0);

// Uniform sample without replacement (partial Fisher-Yates). The sample for
// budget n is a prefix of the sample for budget n + 1 under the same seed.
SelectionManifest select_random(const std::vector<std::string>& pool_ids, const Budget& budget,
                                std::uint64_t seed);

struct HybridOptions {
  // Rescale each space's scores to [0, 1] before Sum/Max combination.
  bool minmax_normalize = false;
};

// Sum: concept + skill. Max: elementwise max. Split: ceil(n/2) best concept
// rows and floor(n/2) best skill rows; a row in both lists is kept once and
// the shortfall is backfilled alternately (concept first) from the next-best
// unused rows of each list.
SelectionManifest select_hybrid(const RelevanceScores& concept_scores,
                                const RelevanceScores& skill_scores, const Budget& budget,
                                HybridMode mode, const std::vector<std::string>& pool_ids,
                                const HybridOptions& options = {});

// Header line {strategy, mode, fraction, resolved_count, seed, config_digest}
// followed by one {id, score, source, rank} object per entry.
std::string format_manifest(const SelectionManifest& manifest);
void write_manifest(const SelectionManifest& manifest, const std::filesystem::path& path);
SelectionManifest parse_manifest(std::string_view text);
SelectionManifest read_manifest(const std::filesystem::path& path);

}  // namespace vlselect
