#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vlselect/embedding.hpp"

namespace vlselect {

// One pool or benchmark example. A multi-turn record (several questions
// about one image) is still one record and one embedding row.
struct InstructionRecord {
  std::string id;
  std::string image_ref;
  std::vector<std::string> questions;
  std::vector<std::string> answers;
  std::optional<std::string> skill_description;

  friend bool operator==(const InstructionRecord&, const InstructionRecord&) = default;
};

// Line-delimited JSON, one record per line, keys:
//   id, image_ref, questions, answers, skill_description (optional)
// Blank lines are skipped. Throws ParseError (with 1-based line number) or
// DuplicateIdError.
std::vector<InstructionRecord> load_instruction_manifest(const std::filesystem::path& path);
std::vector<InstructionRecord> parse_instruction_manifest(std::string_view text);
void write_instruction_manifest(const std::vector<InstructionRecord>& records,
                                const std::filesystem::path& path);

enum class CorpusRole { Pool, Benchmark };

struct Corpus {
  std::string name;
  CorpusRole role = CorpusRole::Pool;
  std::vector<InstructionRecord> records;
  std::optional<EmbeddingMatrix> concept_space;
  std::optional<EmbeddingMatrix> skill_space;
  // Normalized flag as read from disk, before load_corpus normalized the rows.
  std::optional<bool> concept_source_normalized;
  std::optional<bool> skill_source_normalized;

  std::size_t size() const noexcept { return records.size(); }
  std::vector<std::string> ids() const;

  const std::optional<EmbeddingMatrix>& space(Space s) const {
    return s == Space::Concept ? concept_space : skill_space;
  }
  std::optional<EmbeddingMatrix>& space(Space s) { return s == Space::Concept ? concept_space : skill_space; }
};

// Checks every attached matrix against the record count and its declared
// space. Throws AlignmentError naming the offending matrix.
void validate_alignment(const Corpus& corpus);

// Same-space matrices used together (pool vs benchmark) must agree on dim.
void validate_alignment(const Corpus& pool, const Corpus& benchmark);

struct CorpusPaths {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> concept_emb;
  std::optional<std::filesystem::path> skill_emb;
};

// Loads manifest and any embedding files, normalizes the matrices, and
// validates alignment.
Corpus load_corpus(const CorpusPaths& paths, CorpusRole role, std::string name = {});

}  // namespace vlselect
