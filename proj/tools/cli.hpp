#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vlselect/skillgen.hpp"

namespace vlselect::cli {

// Process exit codes.
enum Exit : int { kOk = 0, kInputError = 2, kProviderError = 3, kInternalError = 4 };

struct RunConfig {
  // pool
  std::string pool_manifest;
  std::string pool_concept_emb;
  std::string pool_skill_emb;

  // benchmarks; the four lists are parallel, names may be shorter
  std::vector<std::string> benchmark_manifest;
  std::vector<std::string> benchmark_concept_emb;
  std::vector<std::string> benchmark_skill_emb;
  std::vector<std::string> benchmark_name;

  // select
  std::string strategy = "concept_up";  // concept_up | skill_up | random | hybrid
  std::string mode;                     // round_robin | aggregate | sum | max | split
  double fraction = 0.05;
  std::uint64_t seed = 0;
  bool minmax_normalize = false;

  // extract-skills / embed-skills
  std::string manifest;      // corpus to describe
  std::string descriptions;  // sidecar input for embed-skills
  bool mock_provider = false;
  std::string provider_endpoint;
  std::string model = "gpt-4o";
  std::string embed_endpoint;
  std::string embed_model = "all-MiniLM-L6-v2";
  std::size_t embed_dim = 384;  // mock embedder only
  unsigned max_concurrency = 4;
  unsigned max_retries = 3;
  unsigned timeout_ms = 60000;
  unsigned retry_backoff_ms = 500;
  std::size_t batch_size = 64;
  std::string cache_dir;  // default <out>/skill_cache

  // analyze
  double tau = 0.0;
  bool flip_sign = false;
  std::string rank_aggregate = "mean";  // mean | median

  // synth
  std::size_t pool_size = 5000;
  std::size_t dim_concept = 32;
  std::size_t dim_skill = 32;
  std::size_t concept_clusters = 10;
  std::size_t skill_clusters = 10;
  double noise = 0.05;
  double coupling = 0.1;
  std::size_t skill_benchmarks = 1;
  std::size_t concept_benchmarks = 1;
  std::size_t queries = 20;

  // report
  std::vector<std::string> reports;
  std::string outcomes;

  std::string out = "out";
  unsigned threads = 0;
};

struct CommandIo {
  std::ostream& out;
  std::ostream& err;
};

// Provider statistics of the last extract-skills run, for callers that
// need to audit cache behaviour.
struct ExtractSummary {
  ExtractStats stats;
  std::size_t records = 0;
  std::size_t failures = 0;
};

int cmd_extract_skills(const RunConfig& config, CommandIo io, ExtractSummary* summary = nullptr);
int cmd_embed_skills(const RunConfig& config, CommandIo io);
int cmd_select(const RunConfig& config, CommandIo io);
int cmd_analyze(const RunConfig& config, CommandIo io);
int cmd_synth(const RunConfig& config, CommandIo io);
int cmd_report(const RunConfig& config, CommandIo io);

}  // namespace vlselect::cli
