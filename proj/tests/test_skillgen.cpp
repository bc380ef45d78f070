#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <mutex>
#include <set>

#include "test_util.hpp"
#include "vlselect/errors.hpp"
#include "vlselect/skill_prompt.hpp"
#include "vlselect/skillgen.hpp"

namespace vlselect {
namespace {

using testing::TempDir;

ProviderConfig fast_config(const std::string& model = "mock") {
  ProviderConfig c;
  c.model_name = model;
  c.retry_backoff = std::chrono::milliseconds(0);
  return c;
}

std::vector<InstructionRecord> records(std::size_t n) {
  std::vector<InstructionRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"r" + std::to_string(i), "", {"Question number " + std::to_string(i) + "?"}, {}, {}});
  }
  return out;
}

TEST(Prompt, SingleQuestion) {
  const auto p = build_skill_prompt({"What is the man holding?"});
  EXPECT_EQ(p, std::string(kSkillPromptHeader) + "\nWhat is the man holding?\n\n" +
                   std::string(kSkillPromptInstruction));
}

TEST(Prompt, ThreeQuestionsContainTemplateVerbatim) {
  const auto p = build_skill_prompt({"How many cats?", "What color is\nthe sofa?", "Is it day?"});
  EXPECT_NE(p.find("Here is a list of questions about an image:"), std::string::npos);
  EXPECT_NE(p.find("Don't answer the above questions directly."), std::string::npos);
  EXPECT_NE(p.find("What visual skills are required to answer these questions?"), std::string::npos);
  EXPECT_NE(p.find("Answer in one short sentence with less than 20 words without any extra reasoning."),
            std::string::npos);
  EXPECT_NE(p.find("\nHow many cats?\nWhat color is the sofa?\nIs it day?\n\n"), std::string::npos);
}

TEST(Prompt, EmptyQuestionsRejected) { EXPECT_THROW(build_skill_prompt({}), EmptyInputError); }

TEST(Prompt, FirstLine) {
  EXPECT_EQ(first_line("  Count objects.  \nSecond line"), "Count objects.");
  EXPECT_EQ(first_line("\n\n  Read text.\r\n"), "Read text.");
  EXPECT_EQ(first_line("   \n  "), "");
}

TEST(MockChat, KeywordPhrases) {
  const auto counting = mock_skill_phrase(build_skill_prompt({"How many apples are on the table?"}));
  EXPECT_NE(counting.find("count"), std::string::npos);
  EXPECT_NE(counting.find("Identify and differentiate"), std::string::npos);
  const auto canned = mock_skill_phrase(build_skill_prompt({"Is this a good idea?"}));
  EXPECT_EQ(canned, mock_skill_phrase(build_skill_prompt({"Is this a good idea?"})));
  EXPECT_FALSE(canned.empty());
}

TEST(Extract, EchoResponderAndCache) {
  TempDir dir("skill_cache");
  SkillCache cache(dir.path());
  MockChatProvider provider([](const std::string&) { return std::string("counting objects\nextra"); });
  const auto recs = records(12);
  ExtractStats stats;
  const auto first = extract_skill_descriptions(recs, provider, fast_config(), &cache, &stats);
  ASSERT_EQ(first.size(), 12u);
  EXPECT_EQ(first[3].text, "counting objects");
  EXPECT_EQ(first[3].record_id, "r3");
  EXPECT_EQ(stats.provider_calls, 12u);
  EXPECT_EQ(stats.cache_hits, 0u);

  const auto second = extract_skill_descriptions(recs, provider, fast_config(), &cache, &stats);
  EXPECT_EQ(second, first);
  EXPECT_EQ(stats.provider_calls, 0u);
  EXPECT_EQ(stats.cache_hits, 12u);
  EXPECT_EQ(provider.calls(), 12u);
}

TEST(Extract, CacheKeyIncludesModel) {
  const auto p = build_skill_prompt({"q"});
  EXPECT_NE(skill_prompt_key("a", p), skill_prompt_key("b", p));
  EXPECT_EQ(skill_prompt_key("a", p), skill_prompt_key("a", p));
}

TEST(Extract, CorruptedCacheEntryIsRefetched) {
  TempDir dir("skill_cache_bad");
  SkillCache cache(dir.path());
  MockChatProvider provider;
  const auto recs = records(5);
  const auto first = extract_skill_descriptions(recs, provider, fast_config(), &cache);
  std::ofstream(cache.path_for(first[2].prompt_hash), std::ios::trunc) << "";
  ExtractStats stats;
  const auto second = extract_skill_descriptions(recs, provider, fast_config(), &cache, &stats);
  EXPECT_EQ(stats.provider_calls, 1u);
  EXPECT_EQ(stats.cache_hits, 4u);
  EXPECT_EQ(second, first);
}

TEST(Extract, OutputAlignedUnderConcurrency) {
  MockChatProvider provider([](const std::string& prompt) {
    const auto at = prompt.find("Question number ");
    return "skill for " + prompt.substr(at + 16, prompt.find('?', at) - at - 16);
  });
  auto cfg = fast_config();
  cfg.max_concurrency = 8;
  const auto recs = records(200);
  const auto out = extract_skill_descriptions(recs, provider, cfg, nullptr);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(out[i].record_id, recs[i].id);
    EXPECT_EQ(out[i].text, "skill for " + std::to_string(i));
  }
}

TEST(Extract, RetriesThenSucceeds) {
  std::mutex mu;
  std::map<std::string, int> attempts;
  MockChatProvider provider([&](const std::string& prompt) -> std::string {
    std::lock_guard lock(mu);
    if (++attempts[prompt] < 3) throw ProviderError("transient");
    return "ok";
  });
  ExtractStats stats;
  const auto out = extract_skill_descriptions(records(4), provider, fast_config(), nullptr, &stats);
  EXPECT_EQ(out.size(), 4u);
  EXPECT_EQ(stats.provider_calls, 12u);
}

TEST(Extract, PersistentFailureCarriesRecordId) {
  MockChatProvider provider([](const std::string& prompt) -> std::string {
    if (prompt.find("number 2?") != std::string::npos) throw ProviderError("boom");
    return "fine";
  });
  auto cfg = fast_config();
  cfg.max_retries = 1;
  try {
    extract_skill_descriptions(records(4), provider, cfg, nullptr);
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.record_id(), "r2");
  }
  const auto partial = try_extract_skill_descriptions(records(4), provider, cfg, nullptr);
  ASSERT_EQ(partial.failures.size(), 1u);
  EXPECT_TRUE(partial.descriptions[0].has_value());
  EXPECT_FALSE(partial.descriptions[2].has_value());
}

TEST(Extract, EmptyResponseIsNotRetried) {
  MockChatProvider provider([](const std::string&) { return std::string("  \n"); });
  EXPECT_THROW(extract_skill_descriptions(records(1), provider, fast_config(), nullptr), EmptyResponseError);
  EXPECT_EQ(provider.calls(), 1u);
}

TEST(Embed, MockDimensionAndDeterminism) {
  MockEmbeddingProvider embedder;
  std::vector<SkillDescription> descs{{"a", "count things", "mock", 1},
                                      {"b", "count things", "mock", 2},
                                      {"c", "read text", "mock", 3}};
  auto cfg = fast_config();
  cfg.batch_size = 2;
  const auto m = embed_skill_descriptions(descs, embedder, cfg);
  EXPECT_EQ(m.count(), 3u);
  EXPECT_EQ(m.dim(), 384u);
  EXPECT_EQ(m.space(), Space::Skill);
  EXPECT_TRUE(rows_are_unit(m));
  EXPECT_TRUE(std::equal(m.row(0).begin(), m.row(0).end(), m.row(1).begin()));
  EXPECT_FALSE(std::equal(m.row(0).begin(), m.row(0).end(), m.row(2).begin()));
  EXPECT_EQ(embedder.calls(), 2u);
  EXPECT_EQ(decode_cseb(encode_cseb(m)), m);
}

class DriftingEmbedder : public EmbeddingProvider {
 public:
  std::string id() const override { return "drift"; }
  std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override {
    std::vector<std::vector<float>> out;
    for (std::size_t i = 0; i < texts.size(); ++i) out.push_back(std::vector<float>(calls_++ == 0 ? 4 : 5, 1.0f));
    return out;
  }

 private:
  std::size_t calls_ = 0;
};

TEST(Embed, DimensionDriftAndEmptyInput) {
  DriftingEmbedder embedder;
  std::vector<SkillDescription> descs{{"a", "x", "m", 1}, {"b", "y", "m", 2}};
  EXPECT_THROW(embed_skill_descriptions(descs, embedder), DimensionMismatchError);
  EXPECT_THROW(embed_skill_descriptions({}, embedder), EmptyInputError);
}

TEST(Sidecar, RoundTrip) {
  TempDir dir("sidecar");
  std::vector<SkillDescription> descs{{"a", "count \"things\"", "mock", 0xdeadbeefcafef00dULL},
                                      {"b", "read text", "mock", 7}};
  write_skill_sidecar(descs, dir / "s.jsonl");
  EXPECT_EQ(read_skill_sidecar(dir / "s.jsonl"), descs);
}

}  // namespace
}  // namespace vlselect
