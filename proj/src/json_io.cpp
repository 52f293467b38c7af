#include "ragbreaker/json_io.hpp"

#include "ragbreaker/error.hpp"

namespace ragbreaker {

namespace {

const json& field(const json& j, const char* name, const char* what) {
  if (!j.is_object() || !j.contains(name)) {
    throw Error(ErrorCode::MalformedRecord,
                std::string(what) + ": missing field '" + name + "'");
  }
  return j.at(name);
}

std::string string_field(const json& j, const char* name, const char* what) {
  const auto& v = field(j, name, what);
  if (!v.is_string()) {
    throw Error(ErrorCode::MalformedRecord,
                std::string(what) + ": field '" + name + "' must be a string");
  }
  return v.get<std::string>();
}

json optional_rank(const std::optional<std::size_t>& rank) {
  return rank ? json(*rank) : json(nullptr);
}

}  // namespace

void to_json(json& j, const Document& d) {
  j = {{"id", d.id},
       {"source_uri", d.source_uri},
       {"title", d.title},
       {"body", d.body},
       {"provenance", provenance_name(d.provenance)},
       {"metadata", d.metadata}};
}

void to_json(json& j, const Chunk& c) {
  j = {{"chunk_id", c.chunk_id},
       {"doc_id", c.doc_id},
       {"ordinal", c.ordinal},
       {"text", c.text},
       {"token_count", c.token_count}};
}

void to_json(json& j, const RetrievalResult& r) {
  j = {{"chunk_id", r.chunk_id},
       {"score", r.score},
       {"rank", r.rank},
       {"provenance", provenance_name(r.provenance)}};
}

void to_json(json& j, const RetrievalTrace& t) {
  j = {{"query", t.query},
       {"query_vector_norm", t.query_vector_norm},
       {"results", t.results},
       {"poison_hit", t.poison_hit},
       {"poison_rank", optional_rank(t.poison_rank)},
       {"index_version", t.index_version}};
}

void to_json(json& j, const Answer& a) {
  j = {{"text", a.text},
       {"generator_id", a.generator_id},
       {"context_chunk_ids", a.context_chunk_ids},
       {"elapsed_ms", a.elapsed_ms}};
}

void to_json(json& j, const ScoreTriple& s) {
  j = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

void to_json(json& j, const DropTriple& d) {
  j = {{"p", d.p}, {"r", d.r}, {"f1", d.f1}};
}

void to_json(json& j, const TrialCase& c) {
  j = {{"case_id", c.case_id},
       {"question", c.question},
       {"trigger", c.trigger},
       {"ground_truth", c.ground_truth},
       {"spec_id", c.spec_id}};
}

void to_json(json& j, const TrialResult& r) {
  // elapsed_ms is left out so reports stay byte-reproducible.
  auto scored = [](const ScoredAnswer& s) {
    return json{{"answer",
                 {{"text", s.answer.text},
                  {"generator_id", s.answer.generator_id},
                  {"context_chunk_ids", s.answer.context_chunk_ids}}},
                {"score", s.score}};
  };
  j = {{"case_id", r.case_id},
       {"question", r.question},
       {"adversarial_question", r.adversarial_question},
       {"clean", scored(r.clean)},
       {"attacked", scored(r.attacked)},
       {"drop", r.drop},
       {"poison_rank", optional_rank(r.poison_rank)},
       {"collateral_changed", r.collateral_changed}};
}

void to_json(json& j, const AttackMetrics& m) {
  j = {{"hit_at_1_rate", m.hit_at_1_rate},
       {"mean_poison_rank",
        m.mean_poison_rank ? json(*m.mean_poison_rank) : json(nullptr)},
       {"collateral_rate", m.collateral_rate},
       {"mean_drop", m.mean_drop}};
}

void to_json(json& j, const PoisonSpec& s) {
  j = {{"spec_id", s.spec_id},
       {"trigger", s.trigger},
       {"payload", s.payload},
       {"amplification", s.amplification},
       {"topic_hint", s.topic_hint ? json(*s.topic_hint) : json(nullptr)}};
}

void to_json(json& j, const ManifestEntry& e) {
  j = {{"spec_id", e.spec.spec_id},
       {"spec", e.spec},
       {"doc_id", e.doc_id},
       {"chunk_ids", e.chunk_ids},
       {"injected_at", e.injected_at},
       {"index_version_after", e.index_version_after},
       {"active", e.active}};
}

void to_json(json& j, const AttackManifest& m) {
  j = {{"entries", m.entries()}};
}

void to_json(json& j, const QueryDiff& d) {
  j = {{"query", d.query},
       {"changed", d.changed},
       {"before", d.before},
       {"after", d.after}};
}

PoisonSpec poison_spec_from_json(const json& j) {
  constexpr const char* what = "poison spec";
  PoisonSpec s;
  s.spec_id = string_field(j, "spec_id", what);
  s.trigger = string_field(j, "trigger", what);
  s.payload = string_field(j, "payload", what);
  if (j.contains("amplification") && !j.at("amplification").is_null()) {
    const auto& a = j.at("amplification");
    if (!a.is_number_integer() || a.get<long long>() < 1) {
      throw Error(ErrorCode::InvalidArgument,
                  "poison spec: amplification must be a positive integer");
    }
    s.amplification = a.get<std::size_t>();
  }
  if (j.contains("topic_hint") && j.at("topic_hint").is_string()) {
    s.topic_hint = j.at("topic_hint").get<std::string>();
  }
  s.validate();
  return s;
}

TrialCase trial_case_from_json(const json& j) {
  constexpr const char* what = "trial case";
  TrialCase c;
  c.case_id = string_field(j, "case_id", what);
  c.question = string_field(j, "question", what);
  c.trigger = string_field(j, "trigger", what);
  c.ground_truth = string_field(j, "ground_truth", what);
  c.spec_id = string_field(j, "spec_id", what);
  for (const auto* f : {&c.case_id, &c.question, &c.trigger, &c.ground_truth,
                        &c.spec_id}) {
    if (f->empty()) {
      throw Error(ErrorCode::EmptyField,
                  "trial case '" + c.case_id + "' has an empty field");
    }
  }
  return c;
}

AttackManifest manifest_from_json(const json& j) {
  constexpr const char* what = "manifest";
  AttackManifest m;
  const auto& entries = field(j, "entries", what);
  if (!entries.is_array()) {
    throw Error(ErrorCode::MalformedRecord, "manifest: entries must be a list");
  }
  try {
    for (const auto& e : entries) {
      ManifestEntry entry;
      entry.spec = poison_spec_from_json(field(e, "spec", what));
      entry.doc_id = string_field(e, "doc_id", what);
      entry.chunk_ids = field(e, "chunk_ids", what).get<std::vector<std::string>>();
      entry.injected_at = string_field(e, "injected_at", what);
      entry.index_version_after =
          field(e, "index_version_after", what).get<std::uint64_t>();
      entry.active = field(e, "active", what).get<bool>();
      m.record(std::move(entry));
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::MalformedRecord,
                std::string("manifest: ") + ex.what());
  }
  return m;
}

json document_summary(const Document& d) {
  return {{"id", d.id},
          {"title", d.title},
          {"provenance", provenance_name(d.provenance)}};
}

}  // namespace ragbreaker
