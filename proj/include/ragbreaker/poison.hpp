#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ragbreaker/corpus.hpp"
#include "ragbreaker/embed.hpp"
#include "ragbreaker/index.hpp"

namespace ragbreaker {

struct PoisonSpec {
  std::string spec_id;
  std::string trigger;  // e.g. "Graph Theory"
  std::string payload;  // misleading text to surface
  std::size_t amplification = 8;
  std::optional<std::string> topic_hint;

  void validate() const;  // throws EmptyField / InvalidArgument
};

struct ManifestEntry {
  PoisonSpec spec;  // stored verbatim so the attack can be replayed
  std::string doc_id;
  std::vector<std::string> chunk_ids;
  std::string injected_at;  // UTC, ISO-8601
  std::uint64_t index_version_after = 0;
  bool active = false;
};

/// Ledger of injections. Entries are keyed by spec_id; retracted entries
/// stay listed as inactive.
class AttackManifest {
 public:
  const std::vector<ManifestEntry>& entries() const { return entries_; }
  const ManifestEntry* find(const std::string& spec_id) const;
  const ManifestEntry* find_active(const std::string& spec_id) const;
  std::vector<const ManifestEntry*> active_entries() const;

  /// Adds a new entry, or reactivates a retracted one with the same id.
  void record(ManifestEntry entry);
  void deactivate(const std::string& spec_id);

 private:
  std::vector<ManifestEntry> entries_;
};

/// `trigger` with trailing punctuation and whitespace removed.
std::string normalize_trigger(const std::string& trigger);

/// Builds the doctored document: `amplification` sentences each led by the
/// trigger, with the payload's sentences dealt across them in order.
Document craft_poison_document(const PoisonSpec& spec);

/// trigger + ". " + question, with the trigger's trailing punctuation
/// collapsed to a single period.
std::string make_adversarial_query(const std::string& trigger,
                                   const std::string& question);

/// Crafts, chunks and indexes the poison, then records it in `manifest`.
/// On any error the store, index and manifest are unchanged.
ManifestEntry inject(const PoisonSpec& spec, CorpusStore& store,
                     VectorIndex& index, AttackManifest& manifest,
                     const Embedder& embedder, ChunkParams params);

/// Removes an active injection from index and store and marks it inactive.
const ManifestEntry& retract(const std::string& spec_id, CorpusStore& store,
                             VectorIndex& index, AttackManifest& manifest);

}  // namespace ragbreaker
