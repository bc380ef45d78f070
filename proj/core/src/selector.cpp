#include "vlselect/selector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vlselect/errors.hpp"
#include "vlselect/hash.hpp"
#include "vlselect/parallel.hpp"
#include "vlselect/random.hpp"

namespace vlselect {

using nlohmann::json;

Budget resolve_budget(double fraction, std::size_t pool_count) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw PreconditionError("budget fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  if (pool_count == 0) throw PreconditionError("cannot resolve a budget over an empty pool");
  const double product = fraction * static_cast<double>(pool_count);
  auto count = static_cast<std::size_t>(std::floor(product + 1e-9));
  count = std::clamp<std::size_t>(count, 1, pool_count);
  return {fraction, count};
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::ConceptUp: return "concept_up";
    case Strategy::SkillUp: return "skill_up";
    case Strategy::Random: return "random";
    case Strategy::HybridSum: return "hybrid_sum";
    case Strategy::HybridMax: return "hybrid_max";
    case Strategy::HybridSplit: return "hybrid_split";
  }
  return "unknown";
}

std::string_view to_string(TargetMode m) {
  return m == TargetMode::RoundRobin ? "round_robin" : "aggregate";
}

std::string_view to_string(HybridMode m) {
  switch (m) {
    case HybridMode::Sum: return "sum";
    case HybridMode::Max: return "max";
    case HybridMode::Split: return "split";
  }
  return "unknown";
}

std::string_view to_string(Source s) {
  switch (s) {
    case Source::Concept: return "concept";
    case Source::Skill: return "skill";
    case Source::Random: return "random";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  for (auto s : {Strategy::ConceptUp, Strategy::SkillUp, Strategy::Random, Strategy::HybridSum,
                 Strategy::HybridMax, Strategy::HybridSplit}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::optional<TargetMode> parse_target_mode(std::string_view text) {
  if (text == "round_robin") return TargetMode::RoundRobin;
  if (text == "aggregate") return TargetMode::AggregateScore;
  return std::nullopt;
}

std::optional<HybridMode> parse_hybrid_mode(std::string_view text) {
  if (text == "sum") return HybridMode::Sum;
  if (text == "max") return HybridMode::Max;
  if (text == "split") return HybridMode::Split;
  return std::nullopt;
}

namespace {

Source source_for(Space space) { return space == Space::Concept ? Source::Concept : Source::Skill; }

void sort_and_rank(std::vector<SelectionEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const SelectionEntry& a, const SelectionEntry& b) {
    return ranks_before(a.score, a.row, b.score, b.row);
  });
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = i + 1;
}

// Rows ordered best-first by score; only the leading `k` are guaranteed sorted.
std::vector<std::size_t> best_rows(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> rows(scores.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  k = std::min(k, rows.size());
  auto before = [&](std::size_t a, std::size_t b) { return ranks_before(scores[a], a, scores[b], b); };
  std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end(), before);
  rows.resize(k);
  return rows;
}

void hash_ids(Fnv1a64& h, const std::vector<std::string>& ids) {
  h.update_pod(static_cast<std::uint64_t>(ids.size()));
  for (const auto& id : ids) h.update(id);
}

void hash_budget(Fnv1a64& h, const Budget& b) {
  h.update_pod(b.fraction);
  h.update_pod(static_cast<std::uint64_t>(b.resolved_count));
}

void check_scores(const std::vector<double>& values, const char* label) {
  for (double v : values) {
    if (!std::isfinite(v)) throw PreconditionError(std::string(label) + " relevance scores contain a non-finite value");
  }
}

}  // namespace

RelevanceScores relevance_scores(const Index& pool, const EmbeddingMatrix& queries, Space space,
                                 Aggregator aggregator, unsigned threads) {
  if (pool.space() != space || queries.space() != space) {
    throw SpaceMismatchError("relevance in " + std::string(to_string(space)) + " space needs a " +
                             std::string(to_string(space)) + " index and queries, got index=" +
                             std::string(to_string(pool.space())) +
                             " queries=" + std::string(to_string(queries.space())));
  }
  if (queries.count() == 0) throw EmptyBenchmarkError("benchmark has no queries");
  if (queries.dim() != pool.dim()) {
    throw DimensionMismatchError("benchmark queries have dimension " + std::to_string(queries.dim()) +
                                 ", pool has " + std::to_string(pool.dim()));
  }
  if (!queries.normalized()) throw PreconditionError("benchmark queries must be normalized");

  RelevanceScores out{space, aggregator, std::vector<double>(pool.size())};
  const auto& m = pool.matrix();
  const std::size_t nq = queries.count();
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (pool.size() + kBlock - 1) / kBlock;
  parallel_for_chunks(blocks, threads, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t lo = b * kBlock;
      const std::size_t hi = std::min(pool.size(), lo + kBlock);
      // queries outer so one query stays hot against a block of rows
      std::vector<double> best(hi - lo, -INFINITY), sum(hi - lo, 0.0);
      for (std::size_t q = 0; q < nq; ++q) {
        const auto query = queries.row(q);
        for (std::size_t i = lo; i < hi; ++i) {
          const double s = dot(m.row(i), query);
          best[i - lo] = std::max(best[i - lo], s);
          sum[i - lo] += s;
        }
      }
      for (std::size_t i = lo; i < hi; ++i) {
        out.values[i] = aggregator == Aggregator::MaxOverQueries
                            ? best[i - lo]
                            : sum[i - lo] / static_cast<double>(nq);
      }
    }
  });
  return out;
}

SelectionManifest select_targeted(const Index& pool, const EmbeddingMatrix& queries,
                                  const Budget& budget, TargetMode mode, unsigned threads) {
  if (queries.count() == 0) throw EmptyBenchmarkError("benchmark has no queries");
  if (queries.space() != pool.space()) {
    throw SpaceMismatchError("benchmark queries are in " + std::string(to_string(queries.space())) +
                             " space but the pool index is " + std::string(to_string(pool.space())));
  }
  const std::size_t n = std::min(budget.resolved_count, pool.size());
  const Source source = source_for(pool.space());

  SelectionManifest manifest;
  manifest.strategy = pool.space() == Space::Concept ? Strategy::ConceptUp : Strategy::SkillUp;
  manifest.mode = std::string(to_string(mode));
  manifest.budget = budget;

  Fnv1a64 h;
  h.update(to_string(manifest.strategy)).update(manifest.mode);
  hash_budget(h, budget);
  hash_ids(h, pool.row_ids());
  h.update_span(pool.matrix().data()).update_span(queries.data());
  manifest.config_digest = to_hex(h.digest());

  if (mode == TargetMode::AggregateScore) {
    const auto rel = relevance_scores(pool, queries, pool.space(), Aggregator::MaxOverQueries, threads);
    for (std::size_t row : best_rows(rel.values, n)) {
      manifest.entries.push_back({pool.id(row), row, rel.values[row], source, 0});
    }
    sort_and_rank(manifest.entries);
    return manifest;
  }

  // Round robin. Each query holds a best-first neighbor list that is
  // recomputed with twice the depth whenever it runs dry of unselected rows.
  const std::size_t nq = queries.count();
  std::size_t depth = std::min(pool.size(), (n + nq - 1) / nq + 8);
  auto lists = query_topk_batch(pool, queries, depth, threads);
  std::vector<std::size_t> cursor(nq, 0);
  std::vector<std::size_t> list_depth(nq, depth);
  std::vector<char> taken(pool.size(), 0);

  while (manifest.entries.size() < n) {
    for (std::size_t q = 0; q < nq && manifest.entries.size() < n; ++q) {
      auto& list = lists[q];
      for (;;) {
        while (cursor[q] < list.size() && taken[list[cursor[q]].row]) ++cursor[q];
        if (cursor[q] < list.size() || list_depth[q] >= pool.size()) break;
        list_depth[q] = std::min(pool.size(), list_depth[q] * 2);
        list = query_topk(pool, queries.row(q), list_depth[q]);
      }
      // every list eventually covers the whole pool, and fewer than n <= size
      // rows are taken, so an unselected row is always found
      const Neighbor& pick = list[cursor[q]];
      taken[pick.row] = 1;
      manifest.entries.push_back({pick.id, pick.row, pick.score, source, 0});
    }
  }
  sort_and_rank(manifest.entries);
  return manifest;
}

SelectionManifest select_random(const std::vector<std::string>& pool_ids, const Budget& budget,
                                std::uint64_t seed) {
  const std::size_t n = std::min(budget.resolved_count, pool_ids.size());
  SelectionManifest manifest;
  manifest.strategy = Strategy::Random;
  manifest.budget = budget;
  manifest.seed = seed;

  Fnv1a64 h;
  h.update(to_string(manifest.strategy));
  hash_budget(h, budget);
  h.update_pod(seed);
  hash_ids(h, pool_ids);
  manifest.config_digest = to_hex(h.digest());

  std::vector<std::size_t> order(pool_ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(order.size() - i));
    std::swap(order[i], order[j]);
    manifest.entries.push_back({pool_ids[order[i]], order[i], 0.0, Source::Random, i + 1});
  }
  return manifest;
}

namespace {

std::vector<double> minmax(const std::vector<double>& v) {
  if (v.empty()) return v;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double span = *hi - *lo;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = span > 0.0 ? (v[i] - *lo) / span : 0.0;
  return out;
}

}  // namespace

SelectionManifest select_hybrid(const RelevanceScores& concept_scores,
                                const RelevanceScores& skill_scores, const Budget& budget,
                                HybridMode mode, const std::vector<std::string>& pool_ids,
                                const HybridOptions& options) {
  const std::size_t size = pool_ids.size();
  if (concept_scores.values.size() != size || skill_scores.values.size() != size) {
    throw PreconditionError("hybrid selection needs one concept and one skill score per pool row (" +
                            std::to_string(size) + "), got " +
                            std::to_string(concept_scores.values.size()) + " and " +
                            std::to_string(skill_scores.values.size()));
  }
  check_scores(concept_scores.values, "concept");
  check_scores(skill_scores.values, "skill");
  const std::size_t n = std::min(budget.resolved_count, size);

  SelectionManifest manifest;
  manifest.strategy = mode == HybridMode::Sum   ? Strategy::HybridSum
                      : mode == HybridMode::Max ? Strategy::HybridMax
                                                : Strategy::HybridSplit;
  manifest.mode = std::string(to_string(mode));
  manifest.budget = budget;

  Fnv1a64 h;
  h.update(to_string(manifest.strategy)).update(manifest.mode);
  hash_budget(h, budget);
  h.update_pod(static_cast<std::uint8_t>(options.minmax_normalize));
  hash_ids(h, pool_ids);
  h.update_span(std::span<const double>(concept_scores.values));
  h.update_span(std::span<const double>(skill_scores.values));
  manifest.config_digest = to_hex(h.digest());

  const auto& cs = options.minmax_normalize && mode != HybridMode::Split ? minmax(concept_scores.values)
                                                                        : concept_scores.values;
  const auto& ss = options.minmax_normalize && mode != HybridMode::Split ? minmax(skill_scores.values)
                                                                        : skill_scores.values;

  if (mode == HybridMode::Sum || mode == HybridMode::Max) {
    std::vector<double> combined(size);
    for (std::size_t i = 0; i < size; ++i) {
      combined[i] = mode == HybridMode::Sum ? cs[i] + ss[i] : std::max(cs[i], ss[i]);
    }
    for (std::size_t row : best_rows(combined, n)) {
      const Source src = cs[row] >= ss[row] ? Source::Concept : Source::Skill;
      manifest.entries.push_back({pool_ids[row], row, combined[row], src, 0});
    }
    sort_and_rank(manifest.entries);
    return manifest;
  }

  // Split. Both lists are consumed in best-first order, so sorting them up
  // to n entries each is always enough.
  const auto concept_order = best_rows(cs, n);
  const auto skill_order = best_rows(ss, n);
  std::vector<char> taken(size, 0);
  auto take = [&](std::size_t row, Source src) {
    if (taken[row]) return false;
    taken[row] = 1;
    manifest.entries.push_back({pool_ids[row], row, src == Source::Concept ? cs[row] : ss[row], src, 0});
    return true;
  };
  const std::size_t concept_quota = (n + 1) / 2;
  const std::size_t skill_quota = n / 2;
  std::size_t ci = 0, si = 0;
  for (; ci < concept_quota; ++ci) take(concept_order[ci], Source::Concept);
  for (; si < skill_quota; ++si) take(skill_order[si], Source::Skill);
  bool concept_turn = true;
  while (manifest.entries.size() < n) {
    auto& idx = concept_turn ? ci : si;
    const auto& order = concept_turn ? concept_order : skill_order;
    while (idx < order.size() && !take(order[idx], concept_turn ? Source::Concept : Source::Skill)) ++idx;
    if (idx < order.size()) ++idx;
    concept_turn = !concept_turn;
  }
  sort_and_rank(manifest.entries);
  return manifest;
}

std::string format_manifest(const SelectionManifest& manifest) {
  std::string out;
  json header = {{"strategy", to_string(manifest.strategy)},
                 {"mode", manifest.mode},
                 {"fraction", manifest.budget.fraction},
                 {"resolved_count", manifest.budget.resolved_count},
                 {"seed", manifest.seed ? json(*manifest.seed) : json(nullptr)},
                 {"config_digest", manifest.config_digest}};
  out += header.dump();
  out += '\n';
  for (const auto& e : manifest.entries) {
    json line = {{"id", e.id}, {"score", e.score}, {"source", to_string(e.source)}, {"rank", e.rank}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

void write_manifest(const SelectionManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << format_manifest(manifest);
  if (!out) throw IoError("write failed for " + path.string());
}

SelectionManifest parse_manifest(std::string_view text) {
  SelectionManifest manifest;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json obj = json::parse(line);
      if (line_no == 1) {
        const auto strategy = parse_strategy(obj.at("strategy").get<std::string>());
        if (!strategy) throw ParseError("unknown strategy in manifest header");
        manifest.strategy = *strategy;
        manifest.mode = obj.value("mode", std::string{});
        manifest.budget = {obj.at("fraction").get<double>(), obj.at("resolved_count").get<std::size_t>()};
        if (!obj.at("seed").is_null()) manifest.seed = obj.at("seed").get<std::uint64_t>();
        manifest.config_digest = obj.at("config_digest").get<std::string>();
        continue;
      }
      SelectionEntry e;
      e.id = obj.at("id").get<std::string>();
      e.score = obj.at("score").get<double>();
      const auto src = obj.at("source").get<std::string>();
      e.source = src == "concept" ? Source::Concept : src == "skill" ? Source::Skill : Source::Random;
      if (src != "concept" && src != "skill" && src != "random") throw ParseError("unknown source '" + src + "'");
      e.rank = obj.at("rank").get<std::size_t>();
      manifest.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
  }
  if (line_no == 0) throw ParseError("manifest is empty");
  return manifest;
}

SelectionManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open selection manifest " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str());
}

}  // namespace vlselect
