#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "vlselect/corpus.hpp"
#include "vlselect/embedding.hpp"
#include "vlselect/provider.hpp"

namespace vlselect {

struct SkillDescription {
  std::string record_id;
  std::string text;  // single line, non-empty
  std::string provider_id;
  std::uint64_t prompt_hash = 0;

  friend bool operator==(const SkillDescription&, const SkillDescription&) = default;
};

// Content-addressed store of skill descriptions: one file per key, named by
// the 16-digit hex key, holding the UTF-8 description. Reads may run
// concurrently; writes are serialized and land via rename.
class SkillCache {
 public:
  explicit SkillCache(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }

  // Empty when the entry is absent or unusable (empty, multi-line, or
  // containing control bytes); unusable entries count as misses.
  std::optional<std::string> get(std::uint64_t key) const;
  void put(std::uint64_t key, const std::string& text);

  std::filesystem::path path_for(std::uint64_t key) const;

 private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
};

// Cache key and SkillDescription::prompt_hash: hash of model name and prompt.
std::uint64_t skill_prompt_key(const std::string& model_name, const std::string& prompt);

struct ExtractStats {
  std::size_t cache_hits = 0;
  std::size_t provider_calls = 0;  // attempts, including retries
};

struct ExtractFailure {
  std::string record_id;
  std::string message;
  bool empty_response = false;
};

struct ExtractResult {
  // Aligned with the input records; empty where extraction failed.
  std::vector<std::optional<SkillDescription>> descriptions;
  std::vector<ExtractFailure> failures;  // in record order
  ExtractStats stats;
};

// Builds each record's prompt, serves it from the cache when possible and
// otherwise asks the provider (bounded by config.max_concurrency, retried up
// to config.max_retries times). Responses are cut to their first line and
// cached under skill_prompt_key(config.model_name, prompt). Never throws for
// per-record failures; they are collected in `failures`.
ExtractResult try_extract_skill_descriptions(const std::vector<InstructionRecord>& records,
                                             ChatProvider& provider, const ProviderConfig& config,
                                             SkillCache* cache);

// As above, but throws the first failure: ProviderError carrying the record
// id, or EmptyResponseError.
std::vector<SkillDescription> extract_skill_descriptions(const std::vector<InstructionRecord>& records,
                                                         ChatProvider& provider,
                                                         const ProviderConfig& config,
                                                         SkillCache* cache,
                                                         ExtractStats* stats = nullptr);

// Embeds description texts in batches of config.batch_size into a
// normalized Skill-space matrix. Throws EmptyInputError for no descriptions
// and DimensionMismatchError when the embedder's output dimension drifts.
EmbeddingMatrix embed_skill_descriptions(const std::vector<SkillDescription>& descriptions,
                                         EmbeddingProvider& embedder,
                                         const ProviderConfig& config = {});

// Sidecar: one {record_id, text, provider_id, prompt_hash} object per line,
// prompt_hash as 16 hex digits.
void write_skill_sidecar(const std::vector<SkillDescription>& descriptions,
                         const std::filesystem::path& path);
std::vector<SkillDescription> read_skill_sidecar(const std::filesystem::path& path);

}  // namespace vlselect
