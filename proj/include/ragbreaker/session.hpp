#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "ragbreaker/eval.hpp"
#include "ragbreaker/pipeline.hpp"
#include "ragbreaker/poison.hpp"

namespace ragbreaker {

/// A live assistant plus the attack ledger.
///
/// Readers grab an immutable KnowledgeBase snapshot and never block each
/// other. Writers (inject/retract) are serialized, build the next snapshot
/// off to the side and publish it in one pointer swap, so a query in flight
/// keeps answering from the version it started with.
class RedTeamSession {
 public:
  RedTeamSession(PipelineConfig config, const std::vector<Document>& corpus);

  /// Rebuilds the session from a saved index and its manifest. Active
  /// poisons are re-crafted from their recorded specs.
  static std::unique_ptr<RedTeamSession> open(
      PipelineConfig config, const std::vector<Document>& corpus,
      const std::filesystem::path& index_file);

  RedTeamSession(const RedTeamSession&) = delete;
  RedTeamSession& operator=(const RedTeamSession&) = delete;

  const PipelineConfig& config() const { return config_; }
  const Embedder& embedder() const { return *embedder_; }

  std::shared_ptr<const KnowledgeBase> snapshot() const;
  AttackManifest manifest() const;

  QueryOutcome chat(const std::string& question,
                    std::optional<std::size_t> k = {}) const;

  ManifestEntry inject(const PoisonSpec& spec);
  ManifestEntry retract(const std::string& spec_id);

  /// Runs each case against the current poisoned snapshot and a clean view
  /// of it with every poisoned document removed.
  std::vector<TrialResult> run_trials(std::vector<TrialCase> cases) const;

  /// Writes the index and `<stem>.manifest.json` next to it.
  void save(const std::filesystem::path& index_file) const;

 private:
  void publish(std::shared_ptr<const KnowledgeBase> next);

  PipelineConfig config_;
  std::shared_ptr<const Embedder> embedder_;

  mutable std::shared_mutex snapshot_mutex_;
  std::shared_ptr<const KnowledgeBase> kb_;

  mutable std::mutex writer_mutex_;
  AttackManifest manifest_;
};

std::filesystem::path manifest_path_for(const std::filesystem::path& index_file);

}  // namespace ragbreaker
