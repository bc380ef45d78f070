#include "vlselect/synth.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <string_view>
#include <unordered_set>

#include "vlselect/errors.hpp"
#include "vlselect/knn.hpp"
#include "vlselect/random.hpp"

namespace vlselect {

namespace {

// Independent RNG streams derived from the world seed.
enum Stream : std::uint64_t { kConceptCentroids = 1, kSkillCentroids, kLabels, kConceptNoise, kSkillNoise };

std::vector<float> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.standard_normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

// normalize(base + sigma * gaussian); returns base unchanged when sigma == 0.
std::vector<float> perturb(std::span<const float> base, double sigma, Rng& rng) {
  std::vector<float> out(base.begin(), base.end());
  if (sigma == 0.0) return out;
  std::vector<double> v(base.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    v[i] = static_cast<double>(base[i]) + sigma * rng.standard_normal();
    norm += v[i] * v[i];
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) return out;
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

EmbeddingMatrix centroids(std::size_t k, std::size_t dim, Space space, Rng& rng) {
  EmbeddingMatrix m(0, dim, space, true);
  for (std::size_t c = 0; c < k; ++c) m.push_row(random_unit(rng, dim));
  return m;
}

std::string pad_id(std::string_view prefix, std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return std::string(prefix) + digits;
}

std::string_view row_bytes(const EmbeddingMatrix& m, std::size_t row) {
  const auto r = m.row(row);
  return {reinterpret_cast<const char*>(r.data()), r.size_bytes()};
}

}  // namespace

void validate(const SynthConfig& c) {
  if (c.pool_size == 0) throw PreconditionError("synthetic pool_size must be positive");
  if (c.dim_concept == 0 || c.dim_skill == 0) throw PreconditionError("synthetic dims must be positive");
  if (c.n_concept_clusters == 0 || c.n_skill_clusters == 0) {
    throw PreconditionError("synthetic cluster counts must be positive");
  }
  if (c.n_concept_clusters > c.pool_size || c.n_skill_clusters > c.pool_size) {
    throw PreconditionError("synthetic cluster counts cannot exceed pool_size");
  }
  if (!(c.intra_cluster_noise >= 0.0) || !std::isfinite(c.intra_cluster_noise)) {
    throw PreconditionError("intra_cluster_noise must be finite and >= 0");
  }
  if (!(c.coupling >= 0.0 && c.coupling <= 1.0)) throw PreconditionError("coupling must lie in [0, 1]");
}

SyntheticWorld generate_world(const SynthConfig& config) {
  validate(config);
  SyntheticWorld world;
  world.config = config;

  Rng concept_centroid_rng(mix_seed(config.seed, kConceptCentroids));
  Rng skill_centroid_rng(mix_seed(config.seed, kSkillCentroids));
  world.concept_centroids = centroids(config.n_concept_clusters, config.dim_concept, Space::Concept,
                                      concept_centroid_rng);
  world.skill_centroids =
      centroids(config.n_skill_clusters, config.dim_skill, Space::Skill, skill_centroid_rng);

  Rng label_rng(mix_seed(config.seed, kLabels));
  world.concept_labels.resize(config.pool_size);
  world.skill_labels.resize(config.pool_size);
  for (std::size_t i = 0; i < config.pool_size; ++i) {
    const std::size_t c = label_rng.uniform_below(config.n_concept_clusters);
    const bool coupled = label_rng.uniform01() < config.coupling;
    const std::size_t drawn = label_rng.uniform_below(config.n_skill_clusters);
    world.concept_labels[i] = c;
    world.skill_labels[i] = coupled ? c % config.n_skill_clusters : drawn;
  }

  Rng concept_noise(mix_seed(config.seed, kConceptNoise));
  Rng skill_noise(mix_seed(config.seed, kSkillNoise));
  EmbeddingMatrix concept_rows(0, config.dim_concept, Space::Concept, true);
  EmbeddingMatrix skill_rows(0, config.dim_skill, Space::Skill, true);
  auto& pool = world.pool;
  pool.name = "synth_pool";
  pool.role = CorpusRole::Pool;
  for (std::size_t i = 0; i < config.pool_size; ++i) {
    const auto c = world.concept_labels[i];
    const auto s = world.skill_labels[i];
    concept_rows.push_row(perturb(world.concept_centroids.row(c), config.intra_cluster_noise, concept_noise));
    skill_rows.push_row(perturb(world.skill_centroids.row(s), config.intra_cluster_noise, skill_noise));
    InstructionRecord rec;
    rec.id = pad_id("p", i);
    rec.image_ref = "synth://concept/" + std::to_string(c) + "/" + rec.id;
    rec.questions = {"synthetic question " + std::to_string(i) + " exercising skill " + std::to_string(s)};
    pool.records.push_back(std::move(rec));
  }
  pool.concept_space = std::move(concept_rows);
  pool.skill_space = std::move(skill_rows);
  return world;
}

SyntheticBenchmark make_benchmark(const SyntheticWorld& world, Alignment alignment,
                                  std::size_t n_queries, std::uint64_t seed) {
  if (alignment == Alignment::Indeterminate) {
    throw PreconditionError("synthetic benchmarks are SkillDriven or ConceptDriven");
  }
  if (n_queries == 0) throw PreconditionError("a benchmark needs at least one query");
  const bool skill_driven = alignment == Alignment::SkillDriven;
  const Space shared_space = skill_driven ? Space::Skill : Space::Concept;
  const Space anchor_space = skill_driven ? Space::Concept : Space::Skill;
  const auto& shared_labels = skill_driven ? world.skill_labels : world.concept_labels;
  const auto& shared_centroids = skill_driven ? world.skill_centroids : world.concept_centroids;
  const auto& shared_rows = *world.pool.space(shared_space);
  const auto& anchor_rows = *world.pool.space(anchor_space);
  const std::size_t n_shared = shared_centroids.count();

  const Index shared_index(shared_rows, world.pool.ids());

  // Eligible anchors per shared cluster.
  std::vector<std::vector<std::size_t>> eligible(n_shared);
  std::vector<std::size_t> centroid_best(n_shared);
  for (std::size_t k = 0; k < n_shared; ++k) {
    centroid_best[k] = query_topk(shared_index, shared_centroids.row(k), 1).front().row;
  }
  std::unordered_set<std::string_view> seen;
  for (std::size_t r = 0; r < anchor_rows.count(); ++r) {
    if (!seen.insert(row_bytes(anchor_rows, r)).second) continue;
    const std::size_t k = shared_labels[r];
    if (r != centroid_best[k]) eligible[k].push_back(r);
  }

  Rng rng(mix_seed(seed, skill_driven ? 11 : 12));
  std::vector<std::size_t> candidates;
  for (std::size_t k = 0; k < n_shared; ++k) {
    if (eligible[k].size() >= n_queries) candidates.push_back(k);
  }
  if (candidates.empty()) {
    std::size_t best = 0;
    for (const auto& e : eligible) best = std::max(best, e.size());
    throw CapacityError(std::to_string(n_queries) + " queries requested but no " +
                        std::string(to_string(shared_space)) + " cluster offers more than " +
                        std::to_string(best) + " usable anchors");
  }
  const std::size_t focus = candidates[rng.uniform_below(candidates.size())];

  auto pool_rows = eligible[focus];
  SyntheticBenchmark bench;
  bench.intended = alignment;
  bench.focus_cluster = focus;
  for (std::size_t i = 0; i < n_queries; ++i) {
    const std::size_t j = i + rng.uniform_below(pool_rows.size() - i);
    std::swap(pool_rows[i], pool_rows[j]);
    bench.anchor_rows.push_back(pool_rows[i]);
  }

  const double noise = world.config.intra_cluster_noise;
  EmbeddingMatrix shared_q(0, shared_rows.dim(), shared_space, true);
  EmbeddingMatrix anchor_q(0, anchor_rows.dim(), anchor_space, true);
  auto& corpus = bench.corpus;
  corpus.role = CorpusRole::Benchmark;
  corpus.name = std::string(skill_driven ? "skill_driven_" : "concept_driven_") + std::to_string(seed);
  for (std::size_t i = 0; i < n_queries; ++i) {
    const std::size_t anchor = bench.anchor_rows[i];
    shared_q.push_row(perturb(shared_centroids.row(focus), noise, rng));
    anchor_q.push_row(perturb(anchor_rows.row(anchor), 0.25 * noise, rng));
    InstructionRecord rec;
    rec.id = corpus.name + pad_id("_q", i);
    rec.image_ref = world.pool.records[anchor].image_ref;
    rec.questions = {"synthetic " + std::string(to_string(alignment)) + " query " + std::to_string(i)};
    corpus.records.push_back(std::move(rec));
  }
  corpus.space(shared_space) = std::move(shared_q);
  corpus.space(anchor_space) = std::move(anchor_q);
  return bench;
}

void add_benchmark(SyntheticWorld& world, Alignment alignment, std::size_t n_queries,
                   std::uint64_t seed) {
  world.benchmarks.push_back(make_benchmark(world, alignment, n_queries, seed));
}

PredictorReport evaluate_predictor(const std::vector<SyntheticWorld>& worlds,
                                   const CrossRankOptions& options) {
  PredictorReport report;
  double skill_sum = 0.0, concept_sum = 0.0;
  for (const auto& world : worlds) {
    if (world.benchmarks.empty()) continue;
    const auto ids = world.pool.ids();
    const Index concept_index(*world.pool.concept_space, ids);
    const Index skill_index(*world.pool.skill_space, ids);
    for (const auto& bench : world.benchmarks) {
      const auto r = benchmark_cross_rank(concept_index, skill_index, bench.corpus, options);
      report.outcomes.push_back({bench.corpus.name, bench.intended, r.predicted, r.rank_diff});
      auto& cls = bench.intended == Alignment::SkillDriven ? report.skill_driven : report.concept_driven;
      (bench.intended == Alignment::SkillDriven ? skill_sum : concept_sum) += r.rank_diff;
      ++cls.total;
      if (r.predicted == bench.intended) ++cls.correct;
    }
  }
  if (report.skill_driven.total > 0) {
    report.skill_driven.mean_rank_diff = skill_sum / static_cast<double>(report.skill_driven.total);
  }
  if (report.concept_driven.total > 0) {
    report.concept_driven.mean_rank_diff = concept_sum / static_cast<double>(report.concept_driven.total);
  }
  return report;
}

void export_world(const SyntheticWorld& world, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_instruction_manifest(world.pool.records, dir / "pool.jsonl");
  write_embedding_file(*world.pool.concept_space, dir / "pool.concept.cseb");
  write_embedding_file(*world.pool.skill_space, dir / "pool.skill.cseb");

  std::ofstream labels(dir / "pool_labels.csv", std::ios::binary | std::ios::trunc);
  if (!labels) throw IoError("cannot write " + (dir / "pool_labels.csv").string());
  labels << "id,concept_cluster,skill_cluster\n";
  for (std::size_t i = 0; i < world.pool.records.size(); ++i) {
    labels << world.pool.records[i].id << ',' << world.concept_labels[i] << ',' << world.skill_labels[i]
           << '\n';
  }

  std::ofstream index(dir / "benchmarks.csv", std::ios::binary | std::ios::trunc);
  if (!index) throw IoError("cannot write " + (dir / "benchmarks.csv").string());
  index << "name,intended,focus_cluster,queries\n";
  for (const auto& b : world.benchmarks) {
    const auto& name = b.corpus.name;
    write_instruction_manifest(b.corpus.records, dir / (name + ".jsonl"));
    write_embedding_file(*b.corpus.concept_space, dir / (name + ".concept.cseb"));
    write_embedding_file(*b.corpus.skill_space, dir / (name + ".skill.cseb"));
    index << name << ',' << to_string(b.intended) << ',' << b.focus_cluster << ','
          << b.corpus.records.size() << '\n';
  }
  if (!labels || !index) throw IoError("write failed under " + dir.string());
}

}  // namespace vlselect
