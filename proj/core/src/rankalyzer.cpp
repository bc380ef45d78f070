#include "vlselect/rankalyzer.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vlselect/errors.hpp"
#include "vlselect/parallel.hpp"

namespace vlselect {

using nlohmann::json;

std::string_view to_string(Alignment a) {
  switch (a) {
    case Alignment::ConceptDriven: return "ConceptDriven";
    case Alignment::SkillDriven: return "SkillDriven";
    case Alignment::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

std::optional<Alignment> parse_alignment(std::string_view text) {
  for (auto a : {Alignment::ConceptDriven, Alignment::SkillDriven, Alignment::Indeterminate}) {
    if (to_string(a) == text) return a;
  }
  return std::nullopt;
}

namespace {

void check_same_pool(const Index& concept_index, const Index& skill_index) {
  if (concept_index.space() != Space::Concept || skill_index.space() != Space::Skill) {
    throw SpaceMismatchError("cross ranks need a concept index and a skill index");
  }
  if (concept_index.row_ids() != skill_index.row_ids()) {
    throw PoolMismatchError("concept and skill indexes are built over different pool rows");
  }
  if (concept_index.size() == 0) throw PreconditionError("cross ranks need a non-empty pool");
}

CrossRankSample sample_unchecked(const Index& concept_index, const Index& skill_index,
                                 std::span<const float> concept_query,
                                 std::span<const float> skill_query) {
  const auto top_skill = query_topk(skill_index, skill_query, 1).front();
  const auto top_concept = query_topk(concept_index, concept_query, 1).front();
  CrossRankSample s;
  s.top1_skill_id = top_skill.id;
  s.top1_concept_id = top_concept.id;
  s.r_c_given_s = rank_of(concept_index, concept_query, top_skill.row);
  s.r_s_given_c = rank_of(skill_index, skill_query, top_concept.row);
  return s;
}

double aggregate(std::vector<double> values, RankAggregate how) {
  if (values.empty()) return 0.0;
  if (how == RankAggregate::Mean) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
  }
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError("scatter line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

CrossRankSample cross_ranks_for_sample(const Index& concept_index, const Index& skill_index,
                                       std::span<const float> concept_query,
                                       std::span<const float> skill_query) {
  check_same_pool(concept_index, skill_index);
  return sample_unchecked(concept_index, skill_index, concept_query, skill_query);
}

Alignment predict_alignment(double rank_diff, const CrossRankOptions& options) {
  Alignment a = Alignment::Indeterminate;
  if (rank_diff < -options.tau) a = Alignment::SkillDriven;
  else if (rank_diff > options.tau) a = Alignment::ConceptDriven;
  if (options.flip_sign && a != Alignment::Indeterminate) {
    a = a == Alignment::SkillDriven ? Alignment::ConceptDriven : Alignment::SkillDriven;
  }
  return a;
}

CrossRankReport benchmark_cross_rank(const Index& concept_index, const Index& skill_index,
                                     const Corpus& benchmark, const CrossRankOptions& options) {
  check_same_pool(concept_index, skill_index);
  if (!benchmark.concept_space || !benchmark.skill_space) {
    throw MissingSpaceError("benchmark '" + benchmark.name + "' needs both concept and skill embeddings");
  }
  validate_alignment(benchmark);
  const auto& cq = *benchmark.concept_space;
  const auto& sq = *benchmark.skill_space;
  if (cq.count() == 0) throw EmptyBenchmarkError("benchmark '" + benchmark.name + "' has no samples");

  CrossRankReport report;
  report.benchmark_name = benchmark.name;
  report.samples.resize(cq.count());
  parallel_for_chunks(cq.count(), options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      report.samples[i] = sample_unchecked(concept_index, skill_index, cq.row(i), sq.row(i));
      report.samples[i].benchmark_id = benchmark.records[i].id;
    }
  });

  std::vector<double> c_given_s, s_given_c;
  for (const auto& s : report.samples) {
    c_given_s.push_back(static_cast<double>(s.r_c_given_s));
    s_given_c.push_back(static_cast<double>(s.r_s_given_c));
  }
  report.sample_count = report.samples.size();
  report.mean_r_c_given_s = aggregate(std::move(c_given_s), options.aggregate);
  report.mean_r_s_given_c = aggregate(std::move(s_given_c), options.aggregate);
  report.rank_diff = report.mean_r_s_given_c - report.mean_r_c_given_s;
  report.predicted = predict_alignment(report.rank_diff, options);
  return report;
}

CrossRankReport benchmark_cross_rank(const Corpus& pool, const Corpus& benchmark,
                                     const CrossRankOptions& options) {
  if (!pool.concept_space || !pool.skill_space) {
    throw MissingSpaceError("pool '" + pool.name + "' needs both concept and skill embeddings");
  }
  if (!benchmark.concept_space || !benchmark.skill_space) {
    throw MissingSpaceError("benchmark '" + benchmark.name + "' needs both concept and skill embeddings");
  }
  validate_alignment(pool, benchmark);
  const auto ids = pool.ids();
  const Index concept_index(*pool.concept_space, ids);
  const Index skill_index(*pool.skill_space, ids);
  return benchmark_cross_rank(concept_index, skill_index, benchmark, options);
}

std::optional<std::string> recommended_strategy(Alignment a) {
  switch (a) {
    case Alignment::ConceptDriven: return "concept_up";
    case Alignment::SkillDriven: return "skill_up";
    case Alignment::Indeterminate: return std::nullopt;
  }
  return std::nullopt;
}

std::string format_scatter(const std::vector<CrossRankReport>& reports,
                           const std::optional<std::vector<std::optional<double>>>& outcomes) {
  if (outcomes && outcomes->size() != reports.size()) {
    throw PreconditionError("got " + std::to_string(outcomes->size()) + " outcomes for " +
                            std::to_string(reports.size()) + " reports");
  }
  std::string out = "benchmark,mean_r_c_given_s,mean_r_s_given_c,rank_diff,predicted,perf_diff\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    out += csv_field(r.benchmark_name) + ',' + format_double(r.mean_r_c_given_s) + ',' +
           format_double(r.mean_r_s_given_c) + ',' + format_double(r.rank_diff) + ',' +
           std::string(to_string(r.predicted)) + ',';
    if (outcomes && (*outcomes)[i]) out += format_double(*(*outcomes)[i]);
    out += '\n';
  }
  return out;
}

void export_scatter(const std::vector<CrossRankReport>& reports,
                    const std::optional<std::vector<std::optional<double>>>& outcomes,
                    const std::filesystem::path& path) {
  const std::string text = format_scatter(reports, outcomes);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<ScatterRow> parse_scatter(std::string_view csv) {
  std::vector<ScatterRow> rows;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "benchmark,mean_r_c_given_s,mean_r_s_given_c,rank_diff,predicted,perf_diff") {
        throw ParseError("unexpected scatter header: " + line);
      }
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw ParseError("scatter line " + std::to_string(line_no) + ": expected 6 fields");
    ScatterRow row;
    row.benchmark = f[0];
    row.mean_r_c_given_s = parse_double(f[1], line_no);
    row.mean_r_s_given_c = parse_double(f[2], line_no);
    row.rank_diff = parse_double(f[3], line_no);
    const auto a = parse_alignment(f[4]);
    if (!a) throw ParseError("scatter line " + std::to_string(line_no) + ": bad label '" + f[4] + "'");
    row.predicted = *a;
    if (!f[5].empty()) row.perf_diff = parse_double(f[5], line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_report_jsonl(const std::vector<CrossRankReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    const auto rec = recommended_strategy(r.predicted);
    json obj = {{"benchmark", r.benchmark_name},
                {"mean_r_c_given_s", r.mean_r_c_given_s},
                {"mean_r_s_given_c", r.mean_r_s_given_c},
                {"rank_diff", r.rank_diff},
                {"predicted", to_string(r.predicted)},
                {"recommended_strategy", rec ? json(*rec) : json(nullptr)},
                {"sample_count", r.sample_count}};
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<CrossRankReport> parse_report_jsonl(std::string_view text) {
  std::vector<CrossRankReport> reports;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json obj = json::parse(line);
      CrossRankReport r;
      r.benchmark_name = obj.at("benchmark").get<std::string>();
      r.mean_r_c_given_s = obj.at("mean_r_c_given_s").get<double>();
      r.mean_r_s_given_c = obj.at("mean_r_s_given_c").get<double>();
      r.rank_diff = obj.at("rank_diff").get<double>();
      const auto a = parse_alignment(obj.at("predicted").get<std::string>());
      if (!a) throw ParseError("report line " + std::to_string(line_no) + ": bad predicted label");
      r.predicted = *a;
      r.sample_count = obj.at("sample_count").get<std::size_t>();
      reports.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError("report line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return reports;
}

}  // namespace vlselect
