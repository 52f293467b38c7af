#include "ragbreaker/poison.hpp"

#include <chrono>
#include <ctime>

#include "ragbreaker/error.hpp"
#include "ragbreaker/generate.hpp"

namespace ragbreaker {

namespace {

bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::string strip(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void PoisonSpec::validate() const {
  if (is_blank(spec_id)) throw Error(ErrorCode::EmptyField, "spec_id is empty");
  if (normalize_trigger(trigger).empty()) {
    throw Error(ErrorCode::EmptyField, "trigger is empty");
  }
  if (is_blank(payload)) throw Error(ErrorCode::EmptyField, "payload is empty");
  if (amplification < 1) {
    throw Error(ErrorCode::InvalidArgument, "amplification must be >= 1");
  }
}

const ManifestEntry* AttackManifest::find(const std::string& spec_id) const {
  for (const auto& e : entries_) {
    if (e.spec.spec_id == spec_id) return &e;
  }
  return nullptr;
}

const ManifestEntry* AttackManifest::find_active(
    const std::string& spec_id) const {
  const auto* e = find(spec_id);
  return e && e->active ? e : nullptr;
}

std::vector<const ManifestEntry*> AttackManifest::active_entries() const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries_) {
    if (e.active) out.push_back(&e);
  }
  return out;
}

void AttackManifest::record(ManifestEntry entry) {
  for (auto& e : entries_) {
    if (e.spec.spec_id == entry.spec.spec_id) {
      e = std::move(entry);
      return;
    }
  }
  entries_.push_back(std::move(entry));
}

void AttackManifest::deactivate(const std::string& spec_id) {
  for (auto& e : entries_) {
    if (e.spec.spec_id == spec_id) e.active = false;
  }
}

std::string normalize_trigger(const std::string& trigger) {
  std::string t = strip(trigger);
  while (!t.empty() && (t.back() == '.' || t.back() == ',' ||
                        t.back() == ';' || t.back() == ':' ||
                        t.back() == '!' || t.back() == '?' ||
                        t.back() == ' ' || t.back() == '\t')) {
    t.pop_back();
  }
  return t;
}

Document craft_poison_document(const PoisonSpec& spec) {
  spec.validate();
  const std::string trigger = normalize_trigger(spec.trigger);
  const auto payload = split_sentences(strip(spec.payload));
  const std::size_t slots = spec.amplification;

  std::vector<std::string> sentences(slots);
  // Payload sentence j lands in slot floor(j * slots / m), spreading the
  // payload evenly between trigger repetitions.
  for (std::size_t j = 0; j < payload.size(); ++j) {
    auto& s = sentences[j * slots / payload.size()];
    s += ' ';
    s += payload[j];
    // An unterminated sentence would run into the next trigger.
    const char last = payload[j].back();
    if (last != '.' && last != '!' && last != '?') s += '.';
  }
  std::string body;
  for (auto& tail : sentences) {
    if (!body.empty()) body += ' ';
    body += trigger;
    body += tail.empty() ? "." : ":" + tail;
  }

  Document doc;
  doc.id = "poison/" + spec.spec_id;
  doc.source_uri = "redteam://poison/" + spec.spec_id;
  doc.title = spec.topic_hint.value_or(trigger);
  doc.body = std::move(body);
  doc.provenance = Provenance::Poisoned;
  doc.metadata["spec_id"] = spec.spec_id;
  doc.metadata["trigger"] = spec.trigger;
  return doc;
}

std::string make_adversarial_query(const std::string& trigger,
                                   const std::string& question) {
  const std::string t = normalize_trigger(trigger);
  const std::string q = strip(question);
  if (t.empty()) throw Error(ErrorCode::EmptyField, "trigger is empty");
  if (q.empty()) throw Error(ErrorCode::EmptyField, "question is empty");
  return t + ". " + q;
}

ManifestEntry inject(const PoisonSpec& spec, CorpusStore& store,
                     VectorIndex& index, AttackManifest& manifest,
                     const Embedder& embedder, ChunkParams params) {
  spec.validate();
  if (manifest.find_active(spec.spec_id) != nullptr) {
    throw Error(ErrorCode::DuplicateSpecId,
                "poison spec already active: " + spec.spec_id);
  }
  Document doc = craft_poison_document(spec);
  if (store.contains(doc.id)) {
    throw Error(ErrorCode::DuplicateSpecId,
                "corpus already holds document " + doc.id);
  }
  auto chunks = chunk_document(doc, params);

  ManifestEntry entry;
  entry.spec = spec;
  entry.doc_id = doc.id;
  for (const auto& c : chunks) entry.chunk_ids.push_back(c.chunk_id);
  entry.index_version_after =
      insert_chunks(index, chunks, embedder, Provenance::Poisoned);
  entry.injected_at = utc_now();
  entry.active = true;

  store.add(std::move(doc), std::move(chunks));
  manifest.record(entry);
  return entry;
}

const ManifestEntry& retract(const std::string& spec_id, CorpusStore& store,
                             VectorIndex& index, AttackManifest& manifest) {
  const ManifestEntry* entry = manifest.find(spec_id);
  if (entry == nullptr) {
    throw Error(ErrorCode::UnknownSpecId, "no such poison spec: " + spec_id);
  }
  if (!entry->active) {
    throw Error(ErrorCode::AlreadyRetracted,
                "poison spec already retracted: " + spec_id);
  }
  index.remove(entry->chunk_ids);
  store.remove(entry->doc_id);
  manifest.deactivate(spec_id);
  return *manifest.find(spec_id);
}

}  // namespace ragbreaker
