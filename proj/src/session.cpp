#include "ragbreaker/session.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "ragbreaker/error.hpp"
#include "ragbreaker/json_io.hpp"

namespace ragbreaker {

std::filesystem::path manifest_path_for(
    const std::filesystem::path& index_file) {
  auto p = index_file;
  p.replace_extension(".manifest.json");
  return p;
}

RedTeamSession::RedTeamSession(PipelineConfig config,
                               const std::vector<Document>& corpus)
    : config_(std::move(config)),
      embedder_(std::make_shared<const Embedder>(config_.embedder)) {
  kb_ = std::make_shared<const KnowledgeBase>(
      build_knowledge_base(corpus, *embedder_, config_.chunking));
}

std::unique_ptr<RedTeamSession> RedTeamSession::open(
    PipelineConfig config, const std::vector<Document>& corpus,
    const std::filesystem::path& index_file) {
  auto session = std::make_unique<RedTeamSession>(std::move(config),
                                                  std::vector<Document>{});
  const auto& embedder = *session->embedder_;
  const auto params = session->config_.chunking;

  VectorIndex index = VectorIndex::load(index_file);
  const auto expected = config_fingerprint(embedder, params);
  if (index.config_fingerprint() != expected) {
    throw Error(ErrorCode::FingerprintMismatch,
                "index " + index_file.string() + " was built with fingerprint " +
                    index.config_fingerprint() + ", current config is " +
                    expected);
  }

  AttackManifest manifest;
  const auto mpath = manifest_path_for(index_file);
  if (std::filesystem::exists(mpath)) {
    std::ifstream in(mpath);
    try {
      manifest = manifest_from_json(json::parse(in));
    } catch (const json::parse_error&) {
      throw Error(ErrorCode::MalformedRecord,
                  "manifest is not valid JSON: " + mpath.string());
    }
  }

  auto kb = std::make_shared<KnowledgeBase>();
  for (const auto& doc : corpus) {
    kb->store.add(doc, chunk_document(doc, params));
  }
  for (const auto* entry : manifest.active_entries()) {
    Document doc = craft_poison_document(entry->spec);
    auto chunks = chunk_document(doc, params);
    std::vector<std::string> ids;
    for (const auto& c : chunks) ids.push_back(c.chunk_id);
    if (ids != entry->chunk_ids) {
      throw Error(ErrorCode::MalformedRecord,
                  "manifest entry " + entry->spec.spec_id +
                      " does not match its re-crafted document");
    }
    kb->store.add(std::move(doc), std::move(chunks));
  }

  // The index must cover exactly the chunks we can supply text for.
  std::set<std::string> indexed;
  for (const auto& e : index.entries()) {
    if (kb->store.find_chunk(e.chunk_id) == nullptr) {
      throw Error(ErrorCode::MalformedRecord,
                  "index entry " + e.chunk_id +
                      " has no chunk in the corpus; rebuild the index");
    }
    indexed.insert(e.chunk_id);
  }
  if (indexed.size() != kb->store.chunk_count()) {
    throw Error(ErrorCode::MalformedRecord,
                "corpus has chunks missing from " + index_file.string() +
                    "; rebuild the index");
  }
  kb->index = std::move(index);

  session->manifest_ = std::move(manifest);
  session->kb_ = std::move(kb);
  return session;
}

std::shared_ptr<const KnowledgeBase> RedTeamSession::snapshot() const {
  std::shared_lock lock(snapshot_mutex_);
  return kb_;
}

void RedTeamSession::publish(std::shared_ptr<const KnowledgeBase> next) {
  std::unique_lock lock(snapshot_mutex_);
  kb_ = std::move(next);
}

AttackManifest RedTeamSession::manifest() const {
  std::lock_guard lock(writer_mutex_);
  return manifest_;
}

QueryOutcome RedTeamSession::chat(const std::string& question,
                                  std::optional<std::size_t> k) const {
  const auto kb = snapshot();
  return answer_query(question, *kb, *embedder_, config_, k);
}

ManifestEntry RedTeamSession::inject(const PoisonSpec& spec) {
  std::lock_guard lock(writer_mutex_);
  auto next = std::make_shared<KnowledgeBase>(*snapshot());
  AttackManifest manifest = manifest_;
  auto entry = ragbreaker::inject(spec, next->store, next->index, manifest,
                                  *embedder_, config_.chunking);
  manifest_ = std::move(manifest);
  publish(std::move(next));
  return entry;
}

ManifestEntry RedTeamSession::retract(const std::string& spec_id) {
  std::lock_guard lock(writer_mutex_);
  auto next = std::make_shared<KnowledgeBase>(*snapshot());
  AttackManifest manifest = manifest_;
  ManifestEntry entry =
      ragbreaker::retract(spec_id, next->store, next->index, manifest);
  manifest_ = std::move(manifest);
  publish(std::move(next));
  return entry;
}

std::vector<TrialResult> RedTeamSession::run_trials(
    std::vector<TrialCase> cases) const {
  std::shared_ptr<const KnowledgeBase> poisoned;
  AttackManifest manifest;
  {
    std::lock_guard lock(writer_mutex_);
    poisoned = snapshot();
    manifest = manifest_;
  }
  KnowledgeBase clean = *poisoned;
  std::vector<std::string> doomed_docs;
  std::vector<std::string> doomed_chunks;
  for (const auto* doc : clean.store.documents()) {
    if (doc->provenance != Provenance::Poisoned) continue;
    doomed_docs.push_back(doc->id);
    for (auto& c : clean.store.chunk_ids_of(doc->id)) {
      if (clean.index.contains(c)) doomed_chunks.push_back(std::move(c));
    }
  }
  if (!doomed_chunks.empty()) clean.index.remove(doomed_chunks);
  for (const auto& id : doomed_docs) clean.store.remove(id);

  std::stable_sort(cases.begin(), cases.end(),
                   [](const TrialCase& a, const TrialCase& b) {
                     return a.case_id < b.case_id;
                   });
  std::vector<TrialResult> results;
  std::string failures;
  ErrorCode first_code = ErrorCode::Internal;
  for (const auto& c : cases) {
    try {
      results.push_back(
          run_trial(c, config_, *embedder_, clean, *poisoned, manifest));
    } catch (const Error& e) {
      if (failures.empty()) first_code = e.code();
      failures += "\n  " + c.case_id + ": " + e.what();
    }
  }
  if (!failures.empty()) {
    throw Error(first_code, "trial run failed:" + failures);
  }
  return results;
}

void RedTeamSession::save(const std::filesystem::path& index_file) const {
  std::shared_ptr<const KnowledgeBase> kb;
  AttackManifest manifest;
  {
    std::lock_guard lock(writer_mutex_);
    kb = snapshot();
    manifest = manifest_;
  }
  kb->index.save(index_file);
  const auto mpath = manifest_path_for(index_file);
  std::ofstream out(mpath, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::MissingPath, "cannot write " + mpath.string());
  out << json(manifest).dump(2) << '\n';
}

}  // namespace ragbreaker
