#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vlselect/corpus.hpp"
#include "vlselect/rankalyzer.hpp"

namespace vlselect {

struct SynthConfig {
  std::size_t pool_size = 5000;
  std::size_t dim_concept = 32;
  std::size_t dim_skill = 32;
  std::size_t n_concept_clusters = 10;
  std::size_t n_skill_clusters = 10;
  double intra_cluster_noise = 0.05;  // per-coordinate gaussian sigma
  // Probability that a row's skill cluster is copied from its concept
  // cluster (concept id mod n_skill_clusters) instead of drawn uniformly.
  double coupling = 0.1;
  std::uint64_t seed = 0;
};

// Throws PreconditionError on an invalid configuration.
void validate(const SynthConfig& config);

struct SyntheticBenchmark {
  Corpus corpus;
  Alignment intended = Alignment::Indeterminate;
  // The shared cluster: the skill cluster for SkillDriven, the concept
  // cluster for ConceptDriven.
  std::size_t focus_cluster = 0;
  // Pool rows the anchor-space queries were built from.
  std::vector<std::size_t> anchor_rows;
};

struct SyntheticWorld {
  SynthConfig config;
  Corpus pool;
  std::vector<std::size_t> concept_labels;
  std::vector<std::size_t> skill_labels;
  EmbeddingMatrix concept_centroids;
  EmbeddingMatrix skill_centroids;
  std::vector<SyntheticBenchmark> benchmarks;
};

// Gaussian-perturbed spherical clusters in both spaces; deterministic in
// config.seed. With zero noise every row equals its cluster centroid.
SyntheticWorld generate_world(const SynthConfig& config);

// Builds a benchmark that realizes one alignment regime.
//
// SkillDriven: every skill query sits on one shared skill cluster, while each
// concept query is a near copy of a distinct pool row (the anchor) from that
// skill cluster, so the concept queries range over many concept clusters.
// The best concept match is then the anchor, which ranks well in skill space,
// while the best skill match is an arbitrary member of the skill cluster
// with an unrelated concept. ConceptDriven swaps the roles of the spaces.
//
// Anchors must be distinguishable in their space (first occurrence of their
// vector) and must not be the best match of the shared-cluster centroid.
// The shared cluster is drawn among clusters with at least n_queries such
// rows; CapacityError if there is none.
SyntheticBenchmark make_benchmark(const SyntheticWorld& world, Alignment alignment,
                                  std::size_t n_queries, std::uint64_t seed);

// Convenience: make_benchmark and append to world.benchmarks.
void add_benchmark(SyntheticWorld& world, Alignment alignment, std::size_t n_queries,
                   std::uint64_t seed);

struct PredictorOutcome {
  std::string benchmark;
  Alignment intended = Alignment::Indeterminate;
  Alignment predicted = Alignment::Indeterminate;
  double rank_diff = 0.0;
};

struct ClassAccuracy {
  std::size_t total = 0;
  std::size_t correct = 0;
  double mean_rank_diff = 0.0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct PredictorReport {
  std::vector<PredictorOutcome> outcomes;
  ClassAccuracy skill_driven;
  ClassAccuracy concept_driven;

  std::size_t total() const { return skill_driven.total + concept_driven.total; }
  std::size_t correct() const { return skill_driven.correct + concept_driven.correct; }
  double accuracy() const {
    return total() == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(total());
  }
};

// Runs the cross-rank predictor on every benchmark of every world.
PredictorReport evaluate_predictor(const std::vector<SyntheticWorld>& worlds,
                                   const CrossRankOptions& options = {});

// Writes pool.jsonl, pool.concept.cseb, pool.skill.cseb, pool_labels.csv and
// for each benchmark <name>.jsonl / .concept.cseb / .skill.cseb, plus
// benchmarks.csv listing name, intended alignment and focus cluster.
void export_world(const SyntheticWorld& world, const std::filesystem::path& dir);

}  // namespace vlselect
