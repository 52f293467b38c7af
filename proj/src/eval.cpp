#include "ragbreaker/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

#include "ragbreaker/error.hpp"
#include "ragbreaker/json_io.hpp"

namespace ragbreaker {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingPath, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  // Avoid "-0.00" in reports.
  if (std::string_view(buf).find_first_not_of("-0.") == std::string::npos &&
      buf[0] == '-') {
    return std::string(buf + 1);
  }
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

const std::vector<std::string> kColumns = {
    "question",   "clean_p",    "clean_r",     "clean_f1",
    "attacked_p", "attacked_r", "attacked_f1", "drop_p",
    "drop_r",     "drop_f1",    "poison_rank"};

std::vector<std::string> row_cells(const TrialResult& r, int score_decimals) {
  return {r.adversarial_question,
          fixed(r.clean.score.precision, score_decimals),
          fixed(r.clean.score.recall, score_decimals),
          fixed(r.clean.score.f1, score_decimals),
          fixed(r.attacked.score.precision, score_decimals),
          fixed(r.attacked.score.recall, score_decimals),
          fixed(r.attacked.score.f1, score_decimals),
          fixed(r.drop.p, 2),
          fixed(r.drop.r, 2),
          fixed(r.drop.f1, 2),
          r.poison_rank ? std::to_string(*r.poison_rank) : std::string()};
}

std::string render_text(std::span<const TrialResult> results) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back(kColumns);
  for (const auto& r : results) rows.push_back(row_cells(r, 2));
  std::vector<std::size_t> width(kColumns.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      width[i] = std::max(width[i], row[i].size());
    }
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += " | ";
      out += row[i];
      if (i + 1 < row.size()) out.append(width[i] - row[i].size(), ' ');
    }
    out += '\n';
  };
  emit(rows.front());
  for (std::size_t i = 0; i < width.size(); ++i) {
    if (i > 0) out += "-+-";
    out.append(width[i], '-');
  }
  out += '\n';
  for (std::size_t i = 1; i < rows.size(); ++i) emit(rows[i]);
  return out;
}

std::string render_csv(std::span<const TrialResult> results) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += csv_field(row[i]);
    }
    out += "\r\n";
  };
  emit(kColumns);
  for (const auto& r : results) emit(row_cells(r, 4));
  return out;
}

}  // namespace

double harmonic_f1(double precision, double recall) {
  const double sum = precision + recall;
  return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

ScoreTriple greedy_match(std::span<const EmbeddingVector> candidate,
                         std::span<const EmbeddingVector> reference) {
  if (candidate.empty() || reference.empty()) {
    throw Error(ErrorCode::EmptyText, "cannot score an empty token sequence");
  }
  const std::size_t n = candidate.size();
  const std::size_t m = reference.size();
  const std::size_t dim = candidate[0].dim();
  for (const auto* side : {&candidate, &reference}) {
    for (const auto& v : *side) {
      if (v.dim() != dim) {
        throw Error(ErrorCode::DimensionMismatch,
                    "token vectors of dimension " + std::to_string(dim) +
                        " and " + std::to_string(v.dim()));
      }
    }
  }
  // Row maxima feed precision, column maxima recall. Same arithmetic as
  // cosine(), minus its per-call checks.
  constexpr std::size_t kInline = 64;
  double inline_cols[kInline];
  std::vector<double> heap_cols;
  double* col_best = inline_cols;
  if (m > kInline) {
    heap_cols.resize(m);
    col_best = heap_cols.data();
  }
  std::fill(col_best, col_best + m, -std::numeric_limits<double>::infinity());

  double p_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = candidate[i].values();
    const double na = candidate[i].norm();
    double row_best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      double sim = 0.0;
      if (na != 0.0 && !reference[j].is_zero()) {
        const auto b = reference[j].values();
        double dot = 0.0;
        for (std::size_t d = 0; d < dim; ++d) dot += a[d] * b[d];
        sim = dot / (na * reference[j].norm());
      }
      row_best = std::max(row_best, sim);
      col_best[j] = std::max(col_best[j], sim);
    }
    p_sum += row_best;
  }
  double r_sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) r_sum += col_best[j];
  ScoreTriple s;
  s.precision = p_sum / static_cast<double>(n);
  s.recall = r_sum / static_cast<double>(m);
  s.f1 = harmonic_f1(s.precision, s.recall);
  return s;
}

ScoreTriple bertscore(std::string_view candidate, std::string_view reference,
                      const Embedder& embedder) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (cand.empty() || ref.empty()) {
    throw Error(ErrorCode::EmptyText,
                cand.empty() ? "candidate text has no tokens"
                             : "reference text has no tokens");
  }
  return greedy_match(embedder.embed_tokens(cand), embedder.embed_tokens(ref));
}

ScoreTriple bertscore(std::string_view candidate, std::string_view reference,
                      const EmbedderConfig& config) {
  return bertscore(candidate, reference, Embedder(config));
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = value * scale;
  // Absorb representation error so that e.g. 8.045 (stored as 8.04499...)
  // still rounds up.
  const double nudge = 1e-9 * std::max(1.0, std::abs(scaled));
  return std::floor(scaled + 0.5 + nudge) / scale;
}

double percent_drop_exact(double clean, double attacked) {
  if (clean == 0.0) {
    throw Error(ErrorCode::ZeroCleanScore,
                "percent drop is undefined for a clean score of 0");
  }
  return 100.0 * (clean - attacked) / clean;
}

double percent_drop(double clean, double attacked) {
  return round_half_up(percent_drop_exact(clean, attacked), 2);
}

TrialResult run_trial(const TrialCase& trial, const PipelineConfig& config,
                      const Embedder& embedder, const KnowledgeBase& clean,
                      const KnowledgeBase& poisoned,
                      const AttackManifest& manifest) {
  if (clean.index.config_fingerprint() != poisoned.index.config_fingerprint()) {
    throw Error(ErrorCode::FingerprintMismatch,
                "clean and poisoned indexes use different configurations");
  }
  const ManifestEntry* entry = manifest.find_active(trial.spec_id);
  if (entry == nullptr) {
    throw Error(ErrorCode::UnknownSpecId,
                "case " + trial.case_id + " references inactive or unknown "
                "poison spec '" + trial.spec_id + "'");
  }

  TrialResult result;
  result.case_id = trial.case_id;
  result.question = trial.question;
  result.adversarial_question =
      make_adversarial_query(trial.trigger, trial.question);

  auto clean_run = answer_query(trial.question, clean, embedder, config);
  auto attacked_run =
      answer_query(result.adversarial_question, poisoned, embedder, config);

  result.clean = {clean_run.answer, bertscore(clean_run.answer.text,
                                              trial.ground_truth, embedder)};
  result.attacked = {attacked_run.answer,
                     bertscore(attacked_run.answer.text, trial.ground_truth,
                               embedder)};
  result.drop.p = percent_drop(result.clean.score.precision,
                               result.attacked.score.precision);
  result.drop.r =
      percent_drop(result.clean.score.recall, result.attacked.score.recall);
  result.drop.f1 =
      percent_drop(result.clean.score.f1, result.attacked.score.f1);

  const std::unordered_set<std::string> poison_chunks(entry->chunk_ids.begin(),
                                                      entry->chunk_ids.end());
  for (const auto& r : attacked_run.trace.results) {
    if (poison_chunks.count(r.chunk_id) != 0) {
      result.poison_rank = r.rank;
      break;
    }
  }
  const std::vector<std::string> untriggered = {trial.question};
  result.collateral_changed =
      diff_top_k(clean.index, poisoned.index, untriggered, config.k, embedder)
          .front()
          .changed;
  return result;
}

std::vector<TrialResult> run_trial_suite(std::vector<TrialCase> cases,
                                         const std::vector<PoisonSpec>& specs,
                                         const std::vector<Document>& corpus,
                                         const PipelineConfig& config) {
  std::stable_sort(cases.begin(), cases.end(),
                   [](const TrialCase& a, const TrialCase& b) {
                     return a.case_id < b.case_id;
                   });
  if (cases.empty()) return {};

  const Embedder embedder(config.embedder);
  const KnowledgeBase clean =
      build_knowledge_base(corpus, embedder, config.chunking);
  KnowledgeBase poisoned = clean;
  AttackManifest manifest;
  for (const auto& spec : specs) {
    inject(spec, poisoned.store, poisoned.index, manifest, embedder,
           config.chunking);
  }

  std::vector<TrialResult> results;
  std::string failures;
  ErrorCode first_code = ErrorCode::Internal;
  for (const auto& c : cases) {
    try {
      results.push_back(
          run_trial(c, config, embedder, clean, poisoned, manifest));
    } catch (const Error& e) {
      if (failures.empty()) first_code = e.code();
      failures += "\n  " + c.case_id + ": " + e.what();
    }
  }
  for (const auto& spec : specs) {
    retract(spec.spec_id, poisoned.store, poisoned.index, manifest);
  }
  if (!failures.empty()) {
    throw Error(first_code, "trial suite failed:" + failures);
  }
  return results;
}

AttackMetrics attack_metrics(std::span<const TrialResult> results) {
  if (results.empty()) {
    throw Error(ErrorCode::EmptyResults, "no trial results to summarize");
  }
  AttackMetrics m;
  const auto n = static_cast<double>(results.size());
  std::size_t hits = 0;
  std::size_t retrieved = 0;
  std::size_t rank_sum = 0;
  std::size_t collateral = 0;
  for (const auto& r : results) {
    if (r.poison_rank) {
      ++retrieved;
      rank_sum += *r.poison_rank;
      if (*r.poison_rank == 1) ++hits;
    }
    if (r.collateral_changed) ++collateral;
    m.mean_drop.p += r.drop.p;
    m.mean_drop.r += r.drop.r;
    m.mean_drop.f1 += r.drop.f1;
  }
  m.hit_at_1_rate = static_cast<double>(hits) / n;
  if (retrieved > 0) {
    m.mean_poison_rank =
        static_cast<double>(rank_sum) / static_cast<double>(retrieved);
  }
  m.collateral_rate = static_cast<double>(collateral) / n;
  m.mean_drop.p /= n;
  m.mean_drop.r /= n;
  m.mean_drop.f1 /= n;
  return m;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "text" || name == "txt" || name == "text-table") {
    return ReportFormat::Text;
  }
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw Error(ErrorCode::InvalidArgument,
              "unknown report format '" + std::string(name) +
                  "' (expected text, csv or json)");
}

std::string render_report(std::span<const TrialResult> results,
                          ReportFormat format) {
  switch (format) {
    case ReportFormat::Text:
      return render_text(results);
    case ReportFormat::Csv:
      return render_csv(results);
    case ReportFormat::Json: {
      json rows = json::array();
      for (const auto& r : results) rows.push_back(r);
      return rows.dump(2) + "\n";
    }
  }
  return {};
}

std::vector<TrialCase> parse_trial_cases(std::string_view jsonl,
                                         const std::string& origin) {
  std::vector<TrialCase> cases;
  std::map<std::string, std::size_t> seen;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw Error(ErrorCode::MalformedRecord, where + ": invalid JSON");
    }
    try {
      cases.push_back(trial_case_from_json(j));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
    if (!seen.emplace(cases.back().case_id, line_no).second) {
      throw Error(ErrorCode::MalformedRecord,
                  where + ": duplicate case_id '" + cases.back().case_id + "'");
    }
  }
  return cases;
}

std::vector<TrialCase> load_trial_cases(const std::filesystem::path& path) {
  return parse_trial_cases(read_text(path), path.filename().string());
}

std::vector<PoisonSpec> load_poison_specs(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::vector<PoisonSpec> specs;
  auto load_file = [&](const fs::path& file) {
    const std::string text = read_text(file);
    const auto where = file.filename().string();
    try {
      if (file.extension() == ".jsonl") {
        std::istringstream in(text);
        for (std::string line; std::getline(in, line);) {
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          specs.push_back(poison_spec_from_json(json::parse(line)));
        }
        return;
      }
      const auto doc = json::parse(text);
      if (doc.is_array()) {
        for (const auto& s : doc) specs.push_back(poison_spec_from_json(s));
      } else {
        specs.push_back(poison_spec_from_json(doc));
      }
    } catch (const json::parse_error&) {
      throw Error(ErrorCode::MalformedRecord, where + ": invalid JSON");
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  };

  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".json" || ext == ".jsonl")) {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) load_file(f);
  } else if (fs::is_regular_file(path, ec)) {
    load_file(path);
  } else {
    throw Error(ErrorCode::MissingPath,
                "poison spec path not found: " + path.string());
  }
  std::map<std::string, int> ids;
  for (const auto& s : specs) {
    if (++ids[s.spec_id] > 1) {
      throw Error(ErrorCode::DuplicateSpecId,
                  "poison spec id listed twice: " + s.spec_id);
    }
  }
  return specs;
}

}  // namespace ragbreaker
