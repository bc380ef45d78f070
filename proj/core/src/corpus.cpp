#include "vlselect/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "vlselect/errors.hpp"

namespace vlselect {

using nlohmann::json;

namespace {

std::vector<std::string> string_list(const json& value, const char* key, std::size_t line) {
  if (!value.is_array()) {
    throw ParseError("line " + std::to_string(line) + ": '" + key + "' must be an array of strings");
  }
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const auto& item : value) {
    if (!item.is_string()) {
      throw ParseError("line " + std::to_string(line) + ": '" + key + "' must contain strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

InstructionRecord parse_record(std::string_view text, std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(line) + ": " + e.what());
  }
  if (!obj.is_object()) throw ParseError("line " + std::to_string(line) + ": expected a JSON object");

  InstructionRecord rec;
  const auto id = obj.find("id");
  if (id == obj.end() || !id->is_string() || id->get<std::string>().empty()) {
    throw ParseError("line " + std::to_string(line) + ": missing or empty 'id'");
  }
  rec.id = id->get<std::string>();

  if (auto it = obj.find("image_ref"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError("line " + std::to_string(line) + ": 'image_ref' must be a string");
    rec.image_ref = it->get<std::string>();
  }

  const auto questions = obj.find("questions");
  if (questions == obj.end()) throw ParseError("line " + std::to_string(line) + ": missing 'questions'");
  rec.questions = string_list(*questions, "questions", line);
  if (rec.questions.empty()) throw ParseError("line " + std::to_string(line) + ": 'questions' is empty");
  for (const auto& q : rec.questions) {
    if (q.empty()) throw ParseError("line " + std::to_string(line) + ": empty question text");
  }

  if (auto it = obj.find("answers"); it != obj.end() && !it->is_null()) {
    rec.answers = string_list(*it, "answers", line);
    if (!rec.answers.empty() && rec.answers.size() != rec.questions.size()) {
      throw ParseError("line " + std::to_string(line) + ": 'answers' length differs from 'questions'");
    }
  }

  if (auto it = obj.find("skill_description"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw ParseError("line " + std::to_string(line) + ": 'skill_description' must be a string");
    }
    rec.skill_description = it->get<std::string>();
  }
  return rec;
}

}  // namespace

std::vector<InstructionRecord> parse_instruction_manifest(std::string_view text) {
  std::vector<InstructionRecord> records;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    auto rec = parse_record(line, line_no);
    if (!seen.insert(rec.id).second) {
      throw DuplicateIdError("duplicate record id '" + rec.id + "' at line " + std::to_string(line_no));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<InstructionRecord> load_instruction_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_instruction_manifest(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_instruction_manifest(const std::vector<InstructionRecord>& records,
                                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& rec : records) {
    json obj = {{"id", rec.id},
                {"image_ref", rec.image_ref},
                {"questions", rec.questions},
                {"answers", rec.answers}};
    if (rec.skill_description) obj["skill_description"] = *rec.skill_description;
    out << obj.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.id);
  return out;
}

void validate_alignment(const Corpus& corpus) {
  for (Space s : {Space::Concept, Space::Skill}) {
    const auto& m = corpus.space(s);
    if (!m) continue;
    const std::string label = (corpus.name.empty() ? std::string("corpus") : corpus.name) + " " +
                              std::string(to_string(s)) + " matrix";
    if (m->count() != corpus.records.size()) {
      throw AlignmentError(label + " has " + std::to_string(m->count()) + " rows but corpus has " +
                           std::to_string(corpus.records.size()) + " records");
    }
    if (m->space() != s) throw AlignmentError(label + " is tagged as a " + std::string(to_string(m->space())) + " matrix");
  }
}

void validate_alignment(const Corpus& pool, const Corpus& benchmark) {
  validate_alignment(pool);
  validate_alignment(benchmark);
  for (Space s : {Space::Concept, Space::Skill}) {
    const auto& a = pool.space(s);
    const auto& b = benchmark.space(s);
    if (a && b && a->dim() != b->dim()) {
      throw AlignmentError(std::string(to_string(s)) + " matrix of " +
                           (benchmark.name.empty() ? std::string("benchmark") : benchmark.name) +
                           " has dim " + std::to_string(b->dim()) + " but pool has dim " +
                           std::to_string(a->dim()));
    }
  }
}

Corpus load_corpus(const CorpusPaths& paths, CorpusRole role, std::string name) {
  Corpus corpus;
  corpus.name = name.empty() ? paths.manifest.stem().string() : std::move(name);
  corpus.role = role;
  corpus.records = load_instruction_manifest(paths.manifest);
  if (paths.concept_emb) {
    auto m = load_embedding_file(*paths.concept_emb);
    corpus.concept_source_normalized = m.normalized();
    corpus.concept_space = normalize_rows(m);
  }
  if (paths.skill_emb) {
    auto m = load_embedding_file(*paths.skill_emb);
    corpus.skill_source_normalized = m.normalized();
    corpus.skill_space = normalize_rows(m);
  }
  validate_alignment(corpus);
  return corpus;
}

}  // namespace vlselect
