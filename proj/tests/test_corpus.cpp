#include <gtest/gtest.h>

#include <fstream>

#include "test_util.hpp"
#include "vlselect/corpus.hpp"
#include "vlselect/errors.hpp"

namespace vlselect {
namespace {

using testing::random_unit_matrix;
using testing::TempDir;

const char* kThreeRecords =
    R"({"id":"q1","image_ref":"img/1.jpg","questions":["How many dogs?"],"answers":["2"]})"
    "\n"
    R"({"id":"q2","image_ref":"img/2.jpg","questions":["What color?","Is it big?"],"answers":[]})"
    "\n\n"
    R"({"id":"q3","image_ref":"img/3.jpg","questions":["Read the sign."],"answers":["STOP"],"skill_description":"OCR."})"
    "\n";

TEST(Manifest, EmptyTextGivesNoRecords) {
  EXPECT_TRUE(parse_instruction_manifest("").empty());
  EXPECT_TRUE(parse_instruction_manifest("\n\n").empty());
}

TEST(Manifest, ParsesRecordsInOrder) {
  const auto records = parse_instruction_manifest(kThreeRecords);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].id, "q1");
  EXPECT_EQ(records[1].questions.size(), 2u);
  EXPECT_TRUE(records[1].answers.empty());
  EXPECT_FALSE(records[0].skill_description.has_value());
  EXPECT_EQ(records[2].skill_description.value(), "OCR.");
}

TEST(Manifest, DuplicateIdIsRejected) {
  const std::string text =
      R"({"id":"q7","questions":["a"]})"
      "\n"
      R"({"id":"q7","questions":["b"]})";
  EXPECT_THROW(parse_instruction_manifest(text), DuplicateIdError);
}

TEST(Manifest, ParseErrorsCarryLineNumber) {
  const std::string text =
      R"({"id":"a","questions":["x"]})"
      "\n{not json\n";
  try {
    parse_instruction_manifest(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_instruction_manifest(R"({"questions":["x"]})"), ParseError);
  EXPECT_THROW(parse_instruction_manifest(R"({"id":"a","questions":[]})"), ParseError);
  EXPECT_THROW(parse_instruction_manifest(R"({"id":"a","questions":["x"],"answers":["1","2"]})"),
               ParseError);
}

TEST(Manifest, WriteThenLoadRoundTrips) {
  TempDir dir("manifest");
  const auto records = parse_instruction_manifest(kThreeRecords);
  write_instruction_manifest(records, dir / "m.jsonl");
  EXPECT_EQ(load_instruction_manifest(dir / "m.jsonl"), records);
}

TEST(Corpus, LoadNormalizesAndRecordsSourceFlag) {
  TempDir dir("corpus");
  write_instruction_manifest(parse_instruction_manifest(kThreeRecords), dir / "m.jsonl");
  EmbeddingMatrix raw(3, 2, Space::Concept, false, {3, 4, 1, 0, 0, 2});
  write_embedding_file(raw, dir / "c.cseb");
  const auto corpus = load_corpus({dir / "m.jsonl", dir / "c.cseb", std::nullopt}, CorpusRole::Pool, "p");
  ASSERT_TRUE(corpus.concept_space.has_value());
  EXPECT_FALSE(corpus.skill_space.has_value());
  EXPECT_TRUE(corpus.concept_space->normalized());
  EXPECT_EQ(corpus.concept_source_normalized, false);
  EXPECT_FLOAT_EQ(corpus.concept_space->row(0)[0], 0.6f);
  EXPECT_EQ(corpus.ids(), (std::vector<std::string>{"q1", "q2", "q3"}));
}

TEST(Corpus, RowCountMismatchIsAlignmentError) {
  TempDir dir("corpus_align");
  write_instruction_manifest(parse_instruction_manifest(kThreeRecords), dir / "m.jsonl");
  write_embedding_file(random_unit_matrix(2, 4, 1), dir / "c.cseb");
  EXPECT_THROW(load_corpus({dir / "m.jsonl", dir / "c.cseb", std::nullopt}, CorpusRole::Pool),
               AlignmentError);
}

TEST(Corpus, WrongSpaceTagIsAlignmentError) {
  TempDir dir("corpus_space");
  write_instruction_manifest(parse_instruction_manifest(kThreeRecords), dir / "m.jsonl");
  write_embedding_file(random_unit_matrix(3, 4, 1, Space::Skill), dir / "c.cseb");
  EXPECT_THROW(load_corpus({dir / "m.jsonl", dir / "c.cseb", std::nullopt}, CorpusRole::Pool),
               AlignmentError);
}

TEST(Corpus, PoolBenchmarkDimMismatch) {
  Corpus pool, bench;
  pool.records = parse_instruction_manifest(kThreeRecords);
  pool.concept_space = random_unit_matrix(3, 4, 1);
  bench.records = {pool.records[0]};
  bench.concept_space = random_unit_matrix(1, 5, 2);
  EXPECT_THROW(validate_alignment(pool, bench), AlignmentError);
  bench.concept_space = random_unit_matrix(1, 4, 2);
  EXPECT_NO_THROW(validate_alignment(pool, bench));
}

}  // namespace
}  // namespace vlselect
