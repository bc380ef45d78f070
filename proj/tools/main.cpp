// vlselect: benchmark-targeted instruction selection in concept and skill
// embedding spaces.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "vlselect/hash.hpp"

namespace {

using vlselect::cli::RunConfig;

void add_pool_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--pool-manifest", c.pool_manifest, "Pool instruction manifest (JSONL)");
  sub->add_option("--concept-emb", c.pool_concept_emb, "Pool concept embeddings (CSEB)");
  sub->add_option("--skill-emb", c.pool_skill_emb, "Pool skill embeddings (CSEB)");
}

void add_benchmark_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--benchmark-manifest", c.benchmark_manifest, "Benchmark manifest; repeatable");
  sub->add_option("--benchmark-concept-emb", c.benchmark_concept_emb, "Benchmark concept CSEB; repeatable");
  sub->add_option("--benchmark-skill-emb", c.benchmark_skill_emb, "Benchmark skill CSEB; repeatable");
  sub->add_option("--benchmark-name", c.benchmark_name, "Benchmark display name; repeatable");
}

void add_provider_options(CLI::App* sub, RunConfig& c) {
  sub->add_flag("--mock-provider", c.mock_provider, "Use the deterministic offline chat/embedding mocks");
  sub->add_option("--provider-endpoint", c.provider_endpoint, "Chat-completion URL");
  sub->add_option("--model", c.model, "Chat model name");
  sub->add_option("--embed-endpoint", c.embed_endpoint, "Embeddings URL");
  sub->add_option("--embed-model", c.embed_model, "Embedding model name");
  sub->add_option("--embed-dim", c.embed_dim, "Mock embedder dimension")->check(CLI::PositiveNumber);
  sub->add_option("--max-concurrency", c.max_concurrency, "Concurrent provider requests")
      ->check(CLI::PositiveNumber);
  sub->add_option("--max-retries", c.max_retries, "Retries per record");
  sub->add_option("--timeout-ms", c.timeout_ms, "Per-request timeout");
  sub->add_option("--retry-backoff-ms", c.retry_backoff_ms, "Initial retry backoff");
  sub->add_option("--batch-size", c.batch_size, "Texts per embeddings request")->check(CLI::PositiveNumber);
}

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--out", c.out, "Output directory");
  sub->add_option("--threads", c.threads, "Worker threads (0 = hardware)");
}

std::string toml_string(const std::string& v) {
  std::string out = "\"";
  for (char ch : v) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + '"';
}

// The active subcommand's resolved options as a TOML section that --config
// accepts back.
std::string snapshot_text(const CLI::App* sub) {
  std::string text = "[" + sub->get_name() + "]\n";
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    std::vector<std::string> values = opt->results();
    if (values.empty()) {
      const std::string def = opt->get_default_str();
      if (def.empty() || def == "{}" || def == "[]") continue;
      values = {def};
    }
    std::string line = name + "=";
    if (values.back() == "true" || values.back() == "false") {
      line += values.back();
    } else if (opt->get_expected_max() > 1) {
      line += "[";
      for (std::size_t i = 0; i < values.size(); ++i) line += (i ? "," : "") + toml_string(values[i]);
      line += "]";
    } else {
      line += toml_string(values.back());
    }
    text += line + "\n";
  }
  return text;
}

// Resolved-config snapshot and its digest, written next to the outputs.
void snapshot(const CLI::App* sub, const RunConfig& c) {
  const std::string text = snapshot_text(sub);
  std::filesystem::create_directories(c.out);
  std::ofstream(std::filesystem::path(c.out) / "run_config.toml", std::ios::trunc) << text;
  const auto digest = vlselect::to_hex(vlselect::fnv1a64(text));
  std::ofstream(std::filesystem::path(c.out) / "run_config.digest", std::ios::trunc) << digest << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vlselect: concept/skill targeted instruction selection"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML config; options go in a [<subcommand>] section, flags override it");
  RunConfig c;

  auto* extract = app.add_subcommand("extract-skills", "Describe required skills per record and embed them");
  extract->add_option("--manifest,--pool-manifest", c.manifest, "Manifest to describe")->required();
  extract->add_option("--cache-dir", c.cache_dir, "Skill cache directory (default <out>/skill_cache)");
  add_provider_options(extract, c);
  add_common(extract, c);

  auto* embed = app.add_subcommand("embed-skills", "Embed a skill-description sidecar into a skill CSEB");
  embed->add_option("--descriptions", c.descriptions, "skills.jsonl sidecar")->required();
  add_provider_options(embed, c);
  add_common(embed, c);

  auto* select = app.add_subcommand("select", "Write a budgeted selection manifest");
  add_pool_options(select, c);
  add_benchmark_options(select, c);
  select->add_option("--strategy", c.strategy, "concept_up | skill_up | random | hybrid")
      ->check(CLI::IsMember({"concept_up", "skill_up", "random", "hybrid"}));
  select->add_option("--mode", c.mode, "round_robin | aggregate (targeted); sum | max | split (hybrid)");
  select->add_option("--fraction", c.fraction, "Budget as a fraction of the pool");
  select->add_option("--seed", c.seed, "Seed for random selection");
  select->add_flag("--minmax-normalize", c.minmax_normalize, "Min-max rescale scores before hybrid sum/max");
  add_common(select, c);

  auto* analyze = app.add_subcommand("analyze", "Cross-rank analysis and alignment prediction");
  add_pool_options(analyze, c);
  add_benchmark_options(analyze, c);
  analyze->add_option("--tau", c.tau, "Indeterminate band half-width on rank_diff");
  analyze->add_flag("--flip-sign", c.flip_sign, "Swap the SkillDriven/ConceptDriven sign convention");
  analyze->add_option("--rank-aggregate", c.rank_aggregate, "mean | median");
  add_common(analyze, c);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic world with planted clusters");
  synth->add_option("--pool-size", c.pool_size)->check(CLI::PositiveNumber);
  synth->add_option("--dim-concept", c.dim_concept)->check(CLI::PositiveNumber);
  synth->add_option("--dim-skill", c.dim_skill)->check(CLI::PositiveNumber);
  synth->add_option("--concept-clusters", c.concept_clusters)->check(CLI::PositiveNumber);
  synth->add_option("--skill-clusters", c.skill_clusters)->check(CLI::PositiveNumber);
  synth->add_option("--noise", c.noise, "Per-coordinate gaussian sigma");
  synth->add_option("--coupling", c.coupling, "Probability the skill cluster follows the concept cluster");
  synth->add_option("--seed", c.seed);
  synth->add_option("--skill-benchmarks", c.skill_benchmarks, "Number of SkillDriven benchmarks");
  synth->add_option("--concept-benchmarks", c.concept_benchmarks, "Number of ConceptDriven benchmarks");
  synth->add_option("--queries", c.queries, "Queries per benchmark")->check(CLI::PositiveNumber);
  add_common(synth, c);

  auto* report = app.add_subcommand("report", "Merge analyze reports and outcomes into a scatter CSV");
  report->add_option("--reports", c.reports, "cross_rank.jsonl files")->required();
  report->add_option("--outcomes", c.outcomes, "CSV of benchmark,perf_diff");
  add_common(report, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : vlselect::cli::kInputError;
  }

  const vlselect::cli::CommandIo io{std::cout, std::cerr};
  CLI::App* sub = app.get_subcommands().front();
  try {
    snapshot(sub, c);
  } catch (const std::exception& e) {
    std::cerr << "error: cannot write run config snapshot: " << e.what() << '\n';
    return vlselect::cli::kInputError;
  }
  if (sub == extract) return vlselect::cli::cmd_extract_skills(c, io);
  if (sub == embed) return vlselect::cli::cmd_embed_skills(c, io);
  if (sub == select) return vlselect::cli::cmd_select(c, io);
  if (sub == analyze) return vlselect::cli::cmd_analyze(c, io);
  if (sub == synth) return vlselect::cli::cmd_synth(c, io);
  return vlselect::cli::cmd_report(c, io);
}
