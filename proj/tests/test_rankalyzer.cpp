#include <gtest/gtest.h>

#include "test_util.hpp"
#include "vlselect/errors.hpp"
#include "vlselect/rankalyzer.hpp"

namespace vlselect {
namespace {

using testing::make_ids;
using testing::random_unit_matrix;

Corpus make_corpus(const std::string& name, EmbeddingMatrix concept_m, EmbeddingMatrix skill_m,
                   const std::string& prefix) {
  Corpus c;
  c.name = name;
  for (const auto& id : make_ids(concept_m.count(), prefix)) c.records.push_back({id, "", {"q"}, {}, {}});
  c.concept_space = std::move(concept_m);
  c.skill_space = std::move(skill_m);
  return c;
}

EmbeddingMatrix as_skill(EmbeddingMatrix m) {
  m.set_space(Space::Skill);
  return m;
}

TEST(CrossRank, IdentitySpacesCollapseToOne) {
  const auto pool_c = random_unit_matrix(200, 16, 1);
  const auto bench_c = random_unit_matrix(30, 16, 2);
  const auto pool = make_corpus("pool", pool_c, as_skill(pool_c), "p");
  const auto bench = make_corpus("bench", bench_c, as_skill(bench_c), "b");
  const auto report = benchmark_cross_rank(pool, bench);
  ASSERT_EQ(report.samples.size(), 30u);
  for (const auto& s : report.samples) {
    EXPECT_EQ(s.r_c_given_s, 1u);
    EXPECT_EQ(s.r_s_given_c, 1u);
    EXPECT_EQ(s.top1_concept_id, s.top1_skill_id);
  }
  EXPECT_EQ(report.rank_diff, 0.0);
  EXPECT_EQ(report.predicted, Alignment::Indeterminate);
  EXPECT_EQ(report.sample_count, 30u);
}

TEST(CrossRank, PlantedRank) {
  const auto pool_c = random_unit_matrix(50, 8, 3);
  const auto pool_s = random_unit_matrix(50, 8, 4, Space::Skill);
  const auto ci = build_index(pool_c, make_ids(50));
  const auto si = build_index(pool_s, make_ids(50));
  // concept query = pool row 0; skill query = skill vector of the row that
  // sits at concept rank 5 for that query
  const auto concept_order = full_ranking(ci, pool_c.row(0));
  const std::size_t planted = concept_order[4];
  const auto sample = cross_ranks_for_sample(ci, si, pool_c.row(0), pool_s.row(planted));
  EXPECT_EQ(sample.top1_concept_id, "p0");
  EXPECT_EQ(sample.top1_skill_id, "p" + std::to_string(planted));
  EXPECT_EQ(sample.r_c_given_s, 5u);
  const auto skill_order = full_ranking(si, pool_s.row(planted));
  const auto pos = std::find(skill_order.begin(), skill_order.end(), 0u) - skill_order.begin();
  EXPECT_EQ(sample.r_s_given_c, static_cast<std::size_t>(pos) + 1);
}

TEST(CrossRank, SingleItemPool) {
  EmbeddingMatrix c(1, 2, Space::Concept, true, {1, 0});
  EmbeddingMatrix s(1, 2, Space::Skill, true, {0, 1});
  const auto pool = make_corpus("pool", c, s, "p");
  const auto bench = make_corpus("bench", random_unit_matrix(3, 2, 1), random_unit_matrix(3, 2, 2, Space::Skill), "b");
  const auto r = benchmark_cross_rank(pool, bench);
  for (const auto& smp : r.samples) {
    EXPECT_EQ(smp.r_c_given_s, 1u);
    EXPECT_EQ(smp.r_s_given_c, 1u);
  }
}

TEST(CrossRank, SwappingSpacesNegatesRankDiff) {
  const auto pool_c = random_unit_matrix(120, 8, 5);
  const auto pool_s = random_unit_matrix(120, 8, 6);
  const auto bench_c = random_unit_matrix(15, 8, 7);
  const auto bench_s = random_unit_matrix(15, 8, 8);
  const auto a = benchmark_cross_rank(make_corpus("p", pool_c, as_skill(pool_s), "p"),
                                      make_corpus("b", bench_c, as_skill(bench_s), "b"));
  auto swap_space = [](EmbeddingMatrix m) {
    m.set_space(Space::Concept);
    return m;
  };
  const auto b = benchmark_cross_rank(make_corpus("p", swap_space(pool_s), as_skill(pool_c), "p"),
                                      make_corpus("b", swap_space(bench_s), as_skill(bench_c), "b"));
  EXPECT_EQ(a.mean_r_c_given_s, b.mean_r_s_given_c);
  EXPECT_EQ(a.mean_r_s_given_c, b.mean_r_c_given_s);
  EXPECT_EQ(a.rank_diff, -b.rank_diff);
}

TEST(CrossRank, MeansRecomputeFromSamples) {
  const auto pool = make_corpus("p", random_unit_matrix(90, 6, 9), random_unit_matrix(90, 6, 10, Space::Skill), "p");
  const auto bench = make_corpus("b", random_unit_matrix(11, 6, 11), random_unit_matrix(11, 6, 12, Space::Skill), "b");
  CrossRankOptions opts;
  opts.threads = 3;
  const auto r = benchmark_cross_rank(pool, bench, opts);
  double cs = 0, sc = 0;
  for (const auto& s : r.samples) {
    cs += static_cast<double>(s.r_c_given_s);
    sc += static_cast<double>(s.r_s_given_c);
  }
  EXPECT_DOUBLE_EQ(r.mean_r_c_given_s, cs / 11);
  EXPECT_DOUBLE_EQ(r.mean_r_s_given_c, sc / 11);
  EXPECT_DOUBLE_EQ(r.rank_diff, r.mean_r_s_given_c - r.mean_r_c_given_s);
  opts.threads = 1;
  EXPECT_EQ(benchmark_cross_rank(pool, bench, opts).samples, r.samples);
}

TEST(CrossRank, PredictionThresholdAndSign) {
  EXPECT_EQ(predict_alignment(-3.0), Alignment::SkillDriven);
  EXPECT_EQ(predict_alignment(3.0), Alignment::ConceptDriven);
  EXPECT_EQ(predict_alignment(0.0), Alignment::Indeterminate);
  CrossRankOptions opts;
  opts.tau = 5;
  EXPECT_EQ(predict_alignment(-5.0, opts), Alignment::Indeterminate);
  EXPECT_EQ(predict_alignment(5.5, opts), Alignment::ConceptDriven);
  opts.flip_sign = true;
  EXPECT_EQ(predict_alignment(5.5, opts), Alignment::SkillDriven);
  EXPECT_EQ(recommended_strategy(Alignment::SkillDriven), "skill_up");
  EXPECT_EQ(recommended_strategy(Alignment::ConceptDriven), "concept_up");
  EXPECT_FALSE(recommended_strategy(Alignment::Indeterminate).has_value());
}

TEST(CrossRank, Errors) {
  const auto c = build_index(random_unit_matrix(10, 4, 1), make_ids(10));
  const auto s_other = build_index(random_unit_matrix(10, 4, 2, Space::Skill), make_ids(10, "x"));
  const auto q = random_unit_matrix(1, 4, 3);
  EXPECT_THROW(cross_ranks_for_sample(c, s_other, q.row(0), q.row(0)), PoolMismatchError);

  Corpus pool = make_corpus("p", random_unit_matrix(10, 4, 1), random_unit_matrix(10, 4, 2, Space::Skill), "p");
  Corpus bench = make_corpus("b", random_unit_matrix(2, 4, 1), random_unit_matrix(2, 4, 2, Space::Skill), "b");
  bench.skill_space.reset();
  EXPECT_THROW(benchmark_cross_rank(pool, bench), MissingSpaceError);
  Corpus empty = make_corpus("e", EmbeddingMatrix(0, 4, Space::Concept, true),
                             EmbeddingMatrix(0, 4, Space::Skill, true), "e");
  EXPECT_THROW(benchmark_cross_rank(pool, empty), EmptyBenchmarkError);
}

TEST(Scatter, EmptyIsHeaderOnly) {
  const auto csv = format_scatter({}, std::nullopt);
  EXPECT_EQ(csv, "benchmark,mean_r_c_given_s,mean_r_s_given_c,rank_diff,predicted,perf_diff\n");
  EXPECT_TRUE(parse_scatter(csv).empty());
}

TEST(Scatter, RoundTripWithOutcomes) {
  std::vector<CrossRankReport> reports(3);
  reports[0] = {"mmbench", 1.5, 7.25, 5.75, Alignment::ConceptDriven, 4, {}};
  reports[1] = {"sqa,img", 9.0, 2.0, -7.0, Alignment::SkillDriven, 2, {}};
  reports[2] = {"pope", 3.0, 3.0, 0.0, Alignment::Indeterminate, 1, {}};
  const std::vector<std::optional<double>> outcomes{0.1, std::nullopt, -0.3};
  const auto rows = parse_scatter(format_scatter(reports, outcomes));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].benchmark, "sqa,img");
  EXPECT_EQ(rows[0].rank_diff, 5.75);
  EXPECT_EQ(rows[1].predicted, Alignment::SkillDriven);
  EXPECT_EQ(rows[0].perf_diff, 0.1);
  EXPECT_FALSE(rows[1].perf_diff.has_value());
  EXPECT_EQ(rows[2].perf_diff, -0.3);
}

TEST(ReportJsonl, RoundTrip) {
  std::vector<CrossRankReport> reports(2);
  reports[0] = {"a", 1.5, 7.25, 5.75, Alignment::ConceptDriven, 4, {}};
  reports[1] = {"b", 9.0, 2.0, -7.0, Alignment::SkillDriven, 2, {}};
  const auto back = parse_report_jsonl(format_report_jsonl(reports));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].benchmark_name, "b");
  EXPECT_EQ(back[1].rank_diff, -7.0);
  EXPECT_EQ(back[0].sample_count, 4u);
  EXPECT_EQ(back[0].predicted, Alignment::ConceptDriven);
}

TEST(CrossRank, MedianAggregate) {
  const auto pool = make_corpus("p", random_unit_matrix(90, 6, 9), random_unit_matrix(90, 6, 10, Space::Skill), "p");
  const auto bench = make_corpus("b", random_unit_matrix(5, 6, 11), random_unit_matrix(5, 6, 12, Space::Skill), "b");
  CrossRankOptions opts;
  opts.aggregate = RankAggregate::Median;
  const auto r = benchmark_cross_rank(pool, bench, opts);
  std::vector<std::size_t> v;
  for (const auto& s : r.samples) v.push_back(s.r_c_given_s);
  std::sort(v.begin(), v.end());
  EXPECT_EQ(r.mean_r_c_given_s, static_cast<double>(v[2]));
}

}  // namespace
}  // namespace vlselect
