#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ragbreaker/embed.hpp"
#include "ragbreaker/pipeline.hpp"
#include "ragbreaker/poison.hpp"

namespace ragbreaker {

struct ScoreTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Harmonic mean, 0 when p + r == 0.
double harmonic_f1(double precision, double recall);

/// Greedy token matching: P averages each candidate token's best cosine to
/// the reference, R the other way round. No IDF weighting, no rescaling.
ScoreTriple greedy_match(std::span<const EmbeddingVector> candidate,
                         std::span<const EmbeddingVector> reference);

/// Throws EmptyText if either side has no tokens.
ScoreTriple bertscore(std::string_view candidate, std::string_view reference,
                      const Embedder& embedder);
ScoreTriple bertscore(std::string_view candidate, std::string_view reference,
                      const EmbedderConfig& config);

/// Half-up rounding to `decimals` places.
double round_half_up(double value, int decimals = 2);

/// 100 * (clean - attacked) / clean, unrounded. Throws ZeroCleanScore.
double percent_drop_exact(double clean, double attacked);
/// percent_drop_exact rounded half-up to two decimals.
double percent_drop(double clean, double attacked);

struct TrialCase {
  std::string case_id;
  std::string question;
  std::string trigger;
  std::string ground_truth;
  std::string spec_id;
};

struct ScoredAnswer {
  Answer answer;
  ScoreTriple score;
};

struct DropTriple {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
};

struct TrialResult {
  std::string case_id;
  std::string question;              // untriggered
  std::string adversarial_question;  // trigger-prefixed
  ScoredAnswer clean;
  ScoredAnswer attacked;
  DropTriple drop;
  std::optional<std::size_t> poison_rank;
  bool collateral_changed = false;
};

/// Runs `trial` against a clean and a poisoned knowledge base that share a
/// config fingerprint. `manifest` must hold `trial.spec_id` as active.
TrialResult run_trial(const TrialCase& trial, const PipelineConfig& config,
                      const Embedder& embedder, const KnowledgeBase& clean,
                      const KnowledgeBase& poisoned,
                      const AttackManifest& manifest);

/// Builds a clean knowledge base from `corpus`, injects every spec, runs the
/// cases ordered by case_id, then retracts the specs again.
std::vector<TrialResult> run_trial_suite(std::vector<TrialCase> cases,
                                         const std::vector<PoisonSpec>& specs,
                                         const std::vector<Document>& corpus,
                                         const PipelineConfig& config);

struct AttackMetrics {
  double hit_at_1_rate = 0.0;
  std::optional<double> mean_poison_rank;
  double collateral_rate = 0.0;
  DropTriple mean_drop;
};

AttackMetrics attack_metrics(std::span<const TrialResult> results);

enum class ReportFormat { Text, Csv, Json };
ReportFormat parse_report_format(std::string_view name);

std::string render_report(std::span<const TrialResult> results,
                          ReportFormat format);

std::vector<TrialCase> parse_trial_cases(std::string_view jsonl,
                                         const std::string& origin);
std::vector<TrialCase> load_trial_cases(const std::filesystem::path& path);

/// Accepts a single spec file (.json object or array), a .jsonl file, or a
/// directory of such files.
std::vector<PoisonSpec> load_poison_specs(const std::filesystem::path& path);

}  // namespace ragbreaker
