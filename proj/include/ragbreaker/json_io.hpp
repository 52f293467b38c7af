#pragma once

// Wire formats shared by the service, the CLI and the on-disk files.

#include "json.hpp"
#include "ragbreaker/corpus.hpp"
#include "ragbreaker/eval.hpp"
#include "ragbreaker/generate.hpp"
#include "ragbreaker/index.hpp"
#include "ragbreaker/pipeline.hpp"
#include "ragbreaker/poison.hpp"

namespace ragbreaker {

using nlohmann::json;

void to_json(json& j, const Document& d);
void to_json(json& j, const Chunk& c);
void to_json(json& j, const RetrievalResult& r);
void to_json(json& j, const RetrievalTrace& t);
void to_json(json& j, const Answer& a);
void to_json(json& j, const ScoreTriple& s);
void to_json(json& j, const DropTriple& d);
void to_json(json& j, const TrialCase& c);
void to_json(json& j, const TrialResult& r);
void to_json(json& j, const AttackMetrics& m);
void to_json(json& j, const PoisonSpec& s);
void to_json(json& j, const ManifestEntry& e);
void to_json(json& j, const AttackManifest& m);
void to_json(json& j, const QueryDiff& d);

// Parsers throw Error(MalformedRecord) or Error(EmptyField) with a message
// naming the offending field.
PoisonSpec poison_spec_from_json(const json& j);
TrialCase trial_case_from_json(const json& j);
AttackManifest manifest_from_json(const json& j);

/// Document listing entry: id, title, provenance.
json document_summary(const Document& d);

}  // namespace ragbreaker
