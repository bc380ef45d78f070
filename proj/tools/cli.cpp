#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vlselect/corpus.hpp"
#include "vlselect/errors.hpp"
#include "vlselect/knn.hpp"
#include "vlselect/random.hpp"
#include "vlselect/rankalyzer.hpp"
#include "vlselect/selector.hpp"
#include "vlselect/synth.hpp"

namespace vlselect::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename Fn>
int guarded(CommandIo io, Fn&& fn) {
  try {
    return fn();
  } catch (const ProviderError& e) {
    io.err << "provider error";
    if (!e.record_id().empty()) io.err << " (record " << e.record_id() << ")";
    io.err << ": " << e.what() << '\n';
    return kProviderError;
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Input: return kInputError;
      case ErrorKind::Provider: return kProviderError;
      case ErrorKind::Internal: return kInternalError;
    }
    return kInternalError;
  } catch (const std::exception& e) {
    io.err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

ProviderConfig chat_config(const RunConfig& c) {
  ProviderConfig p;
  p.endpoint = c.provider_endpoint;
  p.model_name = c.mock_provider ? "mock" : c.model;
  p.max_concurrency = c.max_concurrency;
  p.max_retries = c.max_retries;
  p.timeout = std::chrono::milliseconds(c.timeout_ms);
  p.retry_backoff = std::chrono::milliseconds(c.retry_backoff_ms);
  p.batch_size = c.batch_size;
  return p;
}

ProviderConfig embed_config(const RunConfig& c) {
  ProviderConfig p = chat_config(c);
  p.endpoint = c.embed_endpoint;
  p.model_name = c.mock_provider ? "mock" : c.embed_model;
  return p;
}

std::unique_ptr<EmbeddingProvider> make_embedder(const RunConfig& c) {
  if (c.mock_provider) return std::make_unique<MockEmbeddingProvider>(c.embed_dim);
  if (c.embed_endpoint.empty()) {
    throw PreconditionError("--embed-endpoint is required unless --mock-provider is set");
  }
  return std::make_unique<HttpEmbeddingProvider>(embed_config(c));
}

Corpus load_pool(const RunConfig& c) {
  if (c.pool_manifest.empty()) throw PreconditionError("--pool-manifest is required");
  return load_corpus({c.pool_manifest, opt_path(c.pool_concept_emb), opt_path(c.pool_skill_emb)},
                     CorpusRole::Pool, "pool");
}

std::vector<Corpus> load_benchmarks(const RunConfig& c) {
  const std::size_t n = c.benchmark_manifest.size();
  auto check = [&](const std::vector<std::string>& v, const char* flag) {
    if (!v.empty() && v.size() != n) {
      throw PreconditionError(std::string(flag) + " given " + std::to_string(v.size()) +
                              " times for " + std::to_string(n) + " benchmark manifests");
    }
  };
  check(c.benchmark_concept_emb, "--benchmark-concept-emb");
  check(c.benchmark_skill_emb, "--benchmark-skill-emb");
  if (c.benchmark_name.size() > n) throw PreconditionError("more --benchmark-name values than benchmarks");

  std::vector<Corpus> out;
  for (std::size_t i = 0; i < n; ++i) {
    CorpusPaths paths{c.benchmark_manifest[i],
                      c.benchmark_concept_emb.empty() ? std::nullopt : opt_path(c.benchmark_concept_emb[i]),
                      c.benchmark_skill_emb.empty() ? std::nullopt : opt_path(c.benchmark_skill_emb[i])};
    const std::string name = i < c.benchmark_name.size() ? c.benchmark_name[i] : std::string{};
    out.push_back(load_corpus(paths, CorpusRole::Benchmark, name));
  }
  return out;
}

const EmbeddingMatrix& require_space(const Corpus& corpus, Space s, const char* flag) {
  const auto& m = corpus.space(s);
  if (!m) {
    throw MissingSpaceError(corpus.name + " has no " + std::string(to_string(s)) +
                            " embeddings (pass " + flag + ")");
  }
  return *m;
}

}  // namespace

int cmd_extract_skills(const RunConfig& c, CommandIo io, ExtractSummary* summary) {
  return guarded(io, [&] {
    const std::string manifest = c.manifest.empty() ? c.pool_manifest : c.manifest;
    if (manifest.empty()) throw PreconditionError("--manifest is required");
    const auto records = load_instruction_manifest(manifest);

    std::unique_ptr<ChatProvider> provider;
    if (c.mock_provider) {
      provider = std::make_unique<MockChatProvider>();
    } else {
      if (c.provider_endpoint.empty()) {
        throw PreconditionError("--provider-endpoint is required unless --mock-provider is set");
      }
      provider = std::make_unique<HttpChatProvider>(chat_config(c));
    }
    auto embedder = make_embedder(c);

    const fs::path out(c.out);
    ensure_dir(out);
    SkillCache cache(c.cache_dir.empty() ? out / "skill_cache" : fs::path(c.cache_dir));
    auto result = try_extract_skill_descriptions(records, *provider, chat_config(c), &cache);
    if (summary) *summary = {result.stats, records.size(), result.failures.size()};

    io.out << "records: " << records.size() << "  cache hits: " << result.stats.cache_hits
           << "  provider calls: " << result.stats.provider_calls << '\n';

    if (!result.failures.empty()) {
      std::string log;
      for (const auto& f : result.failures) {
        io.err << "record " << f.record_id << ": " << f.message << '\n';
        log += json{{"record_id", f.record_id}, {"error", f.message}}.dump() + '\n';
      }
      write_text(out / "extract_errors.jsonl", log);
      io.err << result.failures.size() << " of " << records.size()
             << " records failed; see extract_errors.jsonl (successes are cached)\n";
      return static_cast<int>(kProviderError);
    }

    std::vector<SkillDescription> descriptions;
    for (auto& d : result.descriptions) descriptions.push_back(std::move(*d));
    write_skill_sidecar(descriptions, out / "skills.jsonl");
    if (descriptions.empty()) {
      io.out << "no records; wrote empty skills.jsonl only\n";
      return static_cast<int>(kOk);
    }
    const auto matrix = embed_skill_descriptions(descriptions, *embedder, embed_config(c));
    write_embedding_file(matrix, out / "skill.cseb");
    io.out << "wrote " << (out / "skills.jsonl").string() << " and " << (out / "skill.cseb").string()
           << " (" << matrix.count() << "x" << matrix.dim() << ")\n";
    return static_cast<int>(kOk);
  });
}

int cmd_embed_skills(const RunConfig& c, CommandIo io) {
  return guarded(io, [&] {
    if (c.descriptions.empty()) throw PreconditionError("--descriptions is required");
    const auto descriptions = read_skill_sidecar(c.descriptions);
    auto embedder = make_embedder(c);
    const auto matrix = embed_skill_descriptions(descriptions, *embedder, embed_config(c));
    const fs::path out(c.out);
    ensure_dir(out);
    write_embedding_file(matrix, out / "skill.cseb");
    io.out << "wrote " << (out / "skill.cseb").string() << " (" << matrix.count() << "x" << matrix.dim()
           << ")\n";
    return static_cast<int>(kOk);
  });
}

int cmd_select(const RunConfig& c, CommandIo io) {
  return guarded(io, [&] {
    const Corpus pool = load_pool(c);
    if (pool.size() == 0) throw PreconditionError("pool manifest is empty");
    const Budget budget = resolve_budget(c.fraction, pool.size());
    const auto ids = pool.ids();

    SelectionManifest manifest;
    if (c.strategy == "random") {
      manifest = select_random(ids, budget, c.seed);
    } else {
      const auto benchmarks = load_benchmarks(c);
      if (benchmarks.size() != 1) {
        throw PreconditionError("select needs exactly one benchmark, got " + std::to_string(benchmarks.size()));
      }
      const Corpus& bench = benchmarks.front();
      validate_alignment(pool, bench);

      if (c.strategy == "concept_up" || c.strategy == "skill_up") {
        const Space s = c.strategy == "concept_up" ? Space::Concept : Space::Skill;
        const char* pool_flag = s == Space::Concept ? "--concept-emb" : "--skill-emb";
        const char* bench_flag = s == Space::Concept ? "--benchmark-concept-emb" : "--benchmark-skill-emb";
        const auto mode = parse_target_mode(c.mode.empty() ? "round_robin" : c.mode);
        if (!mode) throw PreconditionError("mode for " + c.strategy + " must be round_robin or aggregate");
        const Index index(require_space(pool, s, pool_flag), ids);
        manifest = select_targeted(index, require_space(bench, s, bench_flag), budget, *mode, c.threads);
      } else if (c.strategy == "hybrid") {
        const auto mode = parse_hybrid_mode(c.mode.empty() ? "sum" : c.mode);
        if (!mode) throw PreconditionError("mode for hybrid must be sum, max or split");
        const Index ci(require_space(pool, Space::Concept, "--concept-emb"), ids);
        const Index si(require_space(pool, Space::Skill, "--skill-emb"), ids);
        const auto cs = relevance_scores(ci, require_space(bench, Space::Concept, "--benchmark-concept-emb"),
                                         Space::Concept, Aggregator::MaxOverQueries, c.threads);
        const auto ss = relevance_scores(si, require_space(bench, Space::Skill, "--benchmark-skill-emb"),
                                         Space::Skill, Aggregator::MaxOverQueries, c.threads);
        manifest = select_hybrid(cs, ss, budget, *mode, ids, {c.minmax_normalize});
      } else {
        throw PreconditionError("unknown strategy '" + c.strategy +
                                "' (expected concept_up, skill_up, random or hybrid)");
      }
    }

    const fs::path out(c.out);
    ensure_dir(out);
    write_manifest(manifest, out / "selection.jsonl");
    io.out << "strategy: " << to_string(manifest.strategy)
           << (manifest.mode.empty() ? "" : " (" + manifest.mode + ")") << '\n'
           << "resolved_count: " << manifest.budget.resolved_count << '\n'
           << "config_digest: " << manifest.config_digest << '\n'
           << "wrote " << (out / "selection.jsonl").string() << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_analyze(const RunConfig& c, CommandIo io) {
  return guarded(io, [&] {
    const Corpus pool = load_pool(c);
    require_space(pool, Space::Concept, "--concept-emb");
    require_space(pool, Space::Skill, "--skill-emb");
    const auto benchmarks = load_benchmarks(c);
    if (benchmarks.empty()) throw PreconditionError("analyze needs at least one --benchmark-manifest");

    CrossRankOptions options;
    options.tau = c.tau;
    options.flip_sign = c.flip_sign;
    options.threads = c.threads;
    if (c.rank_aggregate == "median") options.aggregate = RankAggregate::Median;
    else if (c.rank_aggregate != "mean") throw PreconditionError("--rank-aggregate must be mean or median");

    const auto ids = pool.ids();
    const Index ci(*pool.concept_space, ids);
    const Index si(*pool.skill_space, ids);
    std::vector<CrossRankReport> reports;
    for (const auto& bench : benchmarks) {
      validate_alignment(pool, bench);
      reports.push_back(benchmark_cross_rank(ci, si, bench, options));
      const auto& r = reports.back();
      const auto rec = recommended_strategy(r.predicted);
      io.out << r.benchmark_name << ": R_c|s=" << r.mean_r_c_given_s << " R_s|c=" << r.mean_r_s_given_c
             << " rank_diff=" << r.rank_diff << " predicted=" << to_string(r.predicted)
             << " recommend=" << (rec ? *rec : std::string("none")) << '\n';
    }

    const fs::path out(c.out);
    ensure_dir(out);
    write_text(out / "cross_rank.jsonl", format_report_jsonl(reports));
    export_scatter(reports, std::nullopt, out / "scatter.csv");
    return static_cast<int>(kOk);
  });
}

int cmd_synth(const RunConfig& c, CommandIo io) {
  return guarded(io, [&] {
    SynthConfig sc;
    sc.pool_size = c.pool_size;
    sc.dim_concept = c.dim_concept;
    sc.dim_skill = c.dim_skill;
    sc.n_concept_clusters = c.concept_clusters;
    sc.n_skill_clusters = c.skill_clusters;
    sc.intra_cluster_noise = c.noise;
    sc.coupling = c.coupling;
    sc.seed = c.seed;
    auto world = generate_world(sc);
    for (std::size_t i = 0; i < c.skill_benchmarks; ++i) {
      add_benchmark(world, Alignment::SkillDriven, c.queries, mix_seed(c.seed, 100 + i));
    }
    for (std::size_t i = 0; i < c.concept_benchmarks; ++i) {
      add_benchmark(world, Alignment::ConceptDriven, c.queries, mix_seed(c.seed, 200 + i));
    }
    export_world(world, c.out);
    io.out << "wrote synthetic world (" << sc.pool_size << " pool rows, " << world.benchmarks.size()
           << " benchmarks) to " << c.out << '\n';
    for (const auto& b : world.benchmarks) {
      io.out << "  " << b.corpus.name << " intended=" << to_string(b.intended) << '\n';
    }
    return static_cast<int>(kOk);
  });
}

int cmd_report(const RunConfig& c, CommandIo io) {
  return guarded(io, [&] {
    if (c.reports.empty()) throw PreconditionError("report needs at least one --reports file");
    std::vector<CrossRankReport> reports;
    for (const auto& path : c.reports) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw IoError("cannot open report " + path);
      std::ostringstream buffer;
      buffer << in.rdbuf();
      auto parsed = parse_report_jsonl(buffer.str());
      reports.insert(reports.end(), parsed.begin(), parsed.end());
    }

    std::optional<std::vector<std::optional<double>>> outcomes;
    if (!c.outcomes.empty()) {
      std::ifstream in(c.outcomes, std::ios::binary);
      if (!in) throw IoError("cannot open outcomes " + c.outcomes);
      std::vector<std::pair<std::string, double>> rows;
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (line_no == 1 && line.rfind("benchmark,", 0) == 0)) continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) {
          throw ParseError(c.outcomes + ": line " + std::to_string(line_no) + ": expected benchmark,perf_diff");
        }
        try {
          rows.emplace_back(line.substr(0, comma), std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
          throw ParseError(c.outcomes + ": line " + std::to_string(line_no) + ": bad perf_diff");
        }
      }
      outcomes.emplace();
      for (const auto& r : reports) {
        std::optional<double> v;
        for (const auto& [name, diff] : rows) {
          if (name == r.benchmark_name) v = diff;
        }
        outcomes->push_back(v);
      }
    }

    const fs::path out(c.out);
    ensure_dir(out);
    export_scatter(reports, outcomes, out / "scatter.csv");
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const auto& r = reports[i];
      io.out << r.benchmark_name << '\t' << r.rank_diff << '\t' << to_string(r.predicted);
      if (outcomes && (*outcomes)[i]) io.out << '\t' << *(*outcomes)[i];
      io.out << '\n';
    }
    io.out << "wrote " << (out / "scatter.csv").string() << '\n';
    return static_cast<int>(kOk);
  });
}

}  // namespace vlselect::cli
