#include "vlselect/skillgen.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "vlselect/errors.hpp"
#include "vlselect/hash.hpp"
#include "vlselect/skill_prompt.hpp"

namespace vlselect {

using nlohmann::json;

namespace {

bool usable_description(std::string_view text) {
  if (text.empty()) return false;
  for (unsigned char c : text) {
    if ((c < 0x20 && c != '\t') || c == 0x7f) return false;
  }
  return true;
}

}  // namespace

SkillCache::SkillCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::filesystem::path SkillCache::path_for(std::uint64_t key) const { return dir_ / to_hex(key); }

std::optional<std::string> SkillCache::get(std::uint64_t key) const {
  std::shared_lock lock(mutex_);
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = std::move(buffer).str();
  if (!usable_description(text)) return std::nullopt;
  return text;
}

void SkillCache::put(std::uint64_t key, const std::string& text) {
  std::unique_lock lock(mutex_);
  const auto target = path_for(key);
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed for cache entry " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move cache entry into place: " + ec.message());
}

std::uint64_t skill_prompt_key(const std::string& model_name, const std::string& prompt) {
  return Fnv1a64{}.update(model_name).update(prompt).digest();
}

ExtractResult try_extract_skill_descriptions(const std::vector<InstructionRecord>& records,
                                             ChatProvider& provider, const ProviderConfig& config,
                                             SkillCache* cache) {
  validate(config);
  const std::size_t n = records.size();
  ExtractResult result;
  result.descriptions.resize(n);
  std::vector<std::optional<ExtractFailure>> failures(n);
  std::atomic<std::size_t> next{0}, hits{0}, calls{0};
  const std::string provider_id = provider.id();

  auto process = [&](std::size_t i) {
    const auto& rec = records[i];
    std::string prompt;
    try {
      prompt = build_skill_prompt(rec.questions);
    } catch (const Error& e) {
      failures[i] = ExtractFailure{rec.id, e.what()};
      return;
    }
    const std::uint64_t key = skill_prompt_key(config.model_name, prompt);
    if (cache) {
      if (auto hit = cache->get(key)) {
        ++hits;
        result.descriptions[i] = SkillDescription{rec.id, std::move(*hit), provider_id, key};
        return;
      }
    }
    std::string last_error;
    for (unsigned attempt = 0; attempt <= config.max_retries; ++attempt) {
      if (attempt > 0 && config.retry_backoff.count() > 0) {
        std::this_thread::sleep_for(config.retry_backoff * (1u << std::min(attempt - 1, 10u)));
      }
      ++calls;
      std::string response;
      try {
        response = provider.complete(prompt);
      } catch (const std::exception& e) {
        last_error = e.what();
        continue;
      }
      std::string text = first_line(response);
      if (!usable_description(text)) {
        failures[i] = ExtractFailure{rec.id, "empty response from provider", true};
        return;
      }
      if (cache) {
        try {
          cache->put(key, text);
        } catch (const Error& e) {
          failures[i] = ExtractFailure{rec.id, e.what()};
          return;
        }
      }
      result.descriptions[i] = SkillDescription{rec.id, std::move(text), provider_id, key};
      return;
    }
    failures[i] = ExtractFailure{rec.id, "provider failed after " + std::to_string(config.max_retries + 1) +
                                             " attempts: " + last_error};
  };

  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(config.max_concurrency, n));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) process(i);
      });
    }
  }

  for (auto& f : failures) {
    if (f) result.failures.push_back(std::move(*f));
  }
  result.stats = {hits.load(), calls.load()};
  return result;
}

std::vector<SkillDescription> extract_skill_descriptions(const std::vector<InstructionRecord>& records,
                                                         ChatProvider& provider,
                                                         const ProviderConfig& config,
                                                         SkillCache* cache, ExtractStats* stats) {
  auto result = try_extract_skill_descriptions(records, provider, config, cache);
  if (stats) *stats = result.stats;
  if (!result.failures.empty()) {
    const auto& f = result.failures.front();
    if (f.empty_response) throw EmptyResponseError("record '" + f.record_id + "': " + f.message);
    throw ProviderError("record '" + f.record_id + "': " + f.message, f.record_id);
  }
  std::vector<SkillDescription> out;
  out.reserve(records.size());
  for (auto& d : result.descriptions) out.push_back(std::move(*d));
  return out;
}

EmbeddingMatrix embed_skill_descriptions(const std::vector<SkillDescription>& descriptions,
                                         EmbeddingProvider& embedder, const ProviderConfig& config) {
  if (descriptions.empty()) throw EmptyInputError("no skill descriptions to embed");
  validate(config);
  EmbeddingMatrix matrix;
  for (std::size_t begin = 0; begin < descriptions.size(); begin += config.batch_size) {
    const std::size_t end = std::min(descriptions.size(), begin + config.batch_size);
    std::vector<std::string> texts;
    for (std::size_t i = begin; i < end; ++i) texts.push_back(descriptions[i].text);
    const auto vectors = embedder.embed(texts);
    if (vectors.size() != texts.size()) {
      throw ProviderError("embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                          std::to_string(texts.size()) + " texts");
    }
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (vectors[i].empty() || (matrix.count() > 0 && vectors[i].size() != matrix.dim())) {
        throw DimensionMismatchError("embedder returned a " + std::to_string(vectors[i].size()) +
                                     "-dim vector for record '" + descriptions[begin + i].record_id +
                                     "' after " + std::to_string(matrix.dim()) + "-dim vectors");
      }
      matrix.push_row(vectors[i]);
    }
  }
  matrix.set_space(Space::Skill);
  matrix.check_finite();
  return normalize_rows(matrix);
}

void write_skill_sidecar(const std::vector<SkillDescription>& descriptions,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& d : descriptions) {
    const json obj = {{"record_id", d.record_id},
                      {"text", d.text},
                      {"provider_id", d.provider_id},
                      {"prompt_hash", to_hex(d.prompt_hash)}};
    out << obj.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<SkillDescription> read_skill_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open skill sidecar " + path.string());
  std::vector<SkillDescription> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json obj = json::parse(line);
      SkillDescription d;
      d.record_id = obj.at("record_id").get<std::string>();
      d.text = obj.at("text").get<std::string>();
      d.provider_id = obj.at("provider_id").get<std::string>();
      d.prompt_hash = std::stoull(obj.at("prompt_hash").get<std::string>(), nullptr, 16);
      if (!usable_description(d.text)) throw ParseError("empty or multi-line description");
      out.push_back(std::move(d));
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace vlselect
