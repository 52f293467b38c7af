// Command-line front end: batch ingestion, chat, poisoning, trials, serving.

#include <pthread.h>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ragbreaker/config.hpp"
#include "ragbreaker/error.hpp"
#include "ragbreaker/eval.hpp"
#include "ragbreaker/json_io.hpp"
#include "ragbreaker/service.hpp"
#include "ragbreaker/session.hpp"

namespace fs = std::filesystem;
using namespace ragbreaker;

namespace {

enum class OutFormat { Text, Csv, Json };

struct Globals {
  std::optional<fs::path> config_path;
  std::optional<std::size_t> k;
  std::string format = "text";
  std::optional<fs::path> index;
  std::optional<fs::path> corpus;
  std::optional<fs::path> poisons;
};

AppConfig resolve_config(const Globals& g) {
  AppConfig cfg = load_config(g.config_path);
  if (g.k) cfg.pipeline.k = *g.k;
  if (g.index) cfg.index = g.index;
  if (g.corpus) cfg.corpus = g.corpus;
  if (g.poisons) cfg.poisons = g.poisons;
  validate(cfg);
  return cfg;
}

OutFormat out_format(const Globals& g) {
  switch (parse_report_format(g.format)) {
    case ReportFormat::Text: return OutFormat::Text;
    case ReportFormat::Csv: return OutFormat::Csv;
    case ReportFormat::Json: return OutFormat::Json;
  }
  return OutFormat::Text;
}

const fs::path& require_corpus(const AppConfig& cfg) {
  if (!cfg.corpus) {
    throw Error(ErrorCode::InvalidConfig,
                "no corpus configured (use --corpus or the config file)");
  }
  return *cfg.corpus;
}

const fs::path& require_index(const AppConfig& cfg, const char* what) {
  if (!cfg.index) {
    throw Error(ErrorCode::InvalidConfig,
                std::string(what) + " needs an index path (use --index)");
  }
  return *cfg.index;
}

// Opens the saved index when one exists, otherwise indexes the corpus in
// memory.
std::unique_ptr<RedTeamSession> open_session(const AppConfig& cfg) {
  const auto docs = ingest_dir(require_corpus(cfg));
  if (cfg.index && fs::exists(*cfg.index)) {
    return RedTeamSession::open(cfg.pipeline, docs, *cfg.index);
  }
  return std::make_unique<RedTeamSession>(cfg.pipeline, docs);
}

std::string fixed(double v, int decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

void write_output(const std::string& text, const std::optional<fs::path>& out) {
  if (!out) {
    std::cout << text;
    return;
  }
  std::ofstream f(*out, std::ios::binary);
  if (!f) throw Error(ErrorCode::MissingPath, "cannot write " + out->string());
  f << text;
}

// --- ingest ----------------------------------------------------------------

void cmd_ingest(const Globals& g, const fs::path& dir) {
  const auto fmt = out_format(g);
  const auto docs = ingest_dir(dir);
  const AppConfig cfg = resolve_config(g);
  if (fmt == OutFormat::Json) {
    json arr = json::array();
    for (const auto& d : docs) {
      auto row = document_summary(d);
      row["chunks"] = chunk_document(d, cfg.pipeline.chunking).size();
      arr.push_back(std::move(row));
    }
    std::cout << arr.dump(2) << "\n";
    return;
  }
  std::size_t chunks = 0;
  for (const auto& d : docs) {
    const auto n = chunk_document(d, cfg.pipeline.chunking).size();
    chunks += n;
    std::cout << d.id << "\t" << provenance_name(d.provenance) << "\t" << n
              << "\t" << d.title << "\n";
  }
  std::cout << docs.size() << " documents, " << chunks << " chunks\n";
}

// --- index -----------------------------------------------------------------

void cmd_index_build(const Globals& g) {
  const AppConfig cfg = resolve_config(g);
  const auto& path = require_index(cfg, "index build");
  RedTeamSession session(cfg.pipeline, ingest_dir(require_corpus(cfg)));
  session.save(path);
  const auto kb = session.snapshot();
  std::cout << "indexed " << kb->index.size() << " chunks into "
            << path.string() << " (fingerprint "
            << kb->index.config_fingerprint() << ")\n";
}

// --- chat ------------------------------------------------------------------

json chat_json(const QueryOutcome& o) {
  return {{"answer",
           {{"text", o.answer.text},
            {"generator_id", o.answer.generator_id},
            {"context_chunk_ids", o.answer.context_chunk_ids}}},
          {"trace", o.trace}};
}

void print_outcome(const QueryOutcome& o, OutFormat fmt) {
  if (fmt == OutFormat::Json) {
    std::cout << chat_json(o).dump(2) << "\n";
    return;
  }
  std::cout << o.answer.text << "\n\n";
  std::cout << "trace: index_version=" << o.trace.index_version
            << " poison_hit=" << (o.trace.poison_hit ? "true" : "false");
  if (o.trace.poison_rank) std::cout << " poison_rank=" << *o.trace.poison_rank;
  std::cout << "\n";
  for (const auto& r : o.trace.results) {
    std::cout << "  " << r.rank << "  " << fixed(r.score, 4) << "  "
              << std::left << std::setw(8) << provenance_name(r.provenance)
              << std::right << "  " << r.chunk_id << "\n";
  }
}

void cmd_chat(const Globals& g, const std::string& question, bool repl) {
  const AppConfig cfg = resolve_config(g);
  const auto fmt = out_format(g);
  auto session = open_session(cfg);
  if (!repl) {
    if (question.empty()) {
      throw Error(ErrorCode::EmptyQuestion, "chat needs a question or --repl");
    }
    print_outcome(session->chat(question), fmt);
    return;
  }
  std::string line;
  while (true) {
    std::cout << "> " << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (line == ":quit" || line == ":q") break;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      print_outcome(session->chat(line), fmt);
    } catch (const Error& e) {
      std::cerr << error_code_name(e.code()) << ": " << e.what() << "\n";
    }
    std::cout << "\n";
  }
}

// --- poison ----------------------------------------------------------------

PoisonSpec single_spec(const fs::path& path) {
  auto specs = load_poison_specs(path);
  if (specs.size() != 1) {
    throw Error(ErrorCode::InvalidArgument,
                path.string() + " holds " + std::to_string(specs.size()) +
                    " specs, expected exactly one");
  }
  return specs.front();
}

void cmd_poison_craft(const Globals& g, const fs::path& spec_path) {
  const auto spec = single_spec(spec_path);
  spec.validate();
  const auto doc = craft_poison_document(spec);
  if (out_format(g) == OutFormat::Json) {
    std::cout << json(doc).dump(2) << "\n";
  } else {
    std::cout << doc.body << "\n";
  }
}

void print_entry(const ManifestEntry& e, OutFormat fmt) {
  if (fmt == OutFormat::Json) {
    std::cout << json(e).dump(2) << "\n";
    return;
  }
  std::cout << e.spec.spec_id << "\t" << (e.active ? "active" : "retracted")
            << "\t" << e.doc_id << "\tchunks=" << e.chunk_ids.size()
            << "\tindex_version=" << e.index_version_after << "\n";
}

void cmd_poison_inject(const Globals& g, const fs::path& spec_path) {
  const AppConfig cfg = resolve_config(g);
  const auto& path = require_index(cfg, "poison inject");
  auto session = open_session(cfg);
  const auto entry = session->inject(single_spec(spec_path));
  session->save(path);
  print_entry(entry, out_format(g));
}

void cmd_poison_retract(const Globals& g, const std::string& spec_id) {
  const AppConfig cfg = resolve_config(g);
  const auto& path = require_index(cfg, "poison retract");
  if (!fs::exists(path)) {
    throw Error(ErrorCode::UnknownSpecId,
                "no saved index at " + path.string() + ", nothing to retract");
  }
  auto session = open_session(cfg);
  const auto entry = session->retract(spec_id);
  session->save(path);
  print_entry(entry, out_format(g));
}

void cmd_poison_list(const Globals& g) {
  const AppConfig cfg = resolve_config(g);
  const auto fmt = out_format(g);
  AttackManifest manifest;
  if (cfg.index && fs::exists(*cfg.index)) {
    manifest = open_session(cfg)->manifest();
  }
  if (fmt == OutFormat::Json) {
    std::cout << json(manifest).dump(2) << "\n";
    return;
  }
  for (const auto& e : manifest.entries()) print_entry(e, fmt);
}

// --- trials ----------------------------------------------------------------

void cmd_trials_run(const Globals& g, const fs::path& cases_path,
                    const std::optional<std::string>& report,
                    const std::optional<fs::path>& out) {
  const AppConfig cfg = resolve_config(g);
  if (!cfg.poisons) {
    throw Error(ErrorCode::InvalidConfig,
                "trials run needs poison specs (use --poisons)");
  }
  const auto fmt = parse_report_format(report.value_or(g.format));
  const auto results =
      run_trial_suite(load_trial_cases(cases_path), load_poison_specs(*cfg.poisons),
                      ingest_dir(require_corpus(cfg)), cfg.pipeline);
  write_output(render_report(results, fmt), out);
}

// --- serve -----------------------------------------------------------------

void cmd_serve(const Globals& g, std::optional<int> port) {
  AppConfig cfg = resolve_config(g);
  if (port) cfg.service.port = *port;
  validate(cfg);

  // Block the shutdown signals before any server thread exists so that only
  // sigwait below ever sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto service = serve(cfg);
  std::cerr << "listening on " << cfg.service.host << ":" << service->port()
            << "\n";
  int sig = 0;
  sigwait(&signals, &sig);
  std::cerr << "shutting down\n";
  service->stop();
}

int exit_code_for(const Error& e) {
  const int status = http_status(e.code());
  return status >= 400 && status < 500 ? 1 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisoning red-team harness for a retrieval-augmented assistant"};
  app.require_subcommand(1);

  Globals g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--k", g.k, "number of chunks to retrieve")
      ->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "output format")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  app.add_option("--index", g.index, "saved index file");
  app.add_option("--corpus", g.corpus, "corpus directory");
  app.add_option("--poisons", g.poisons, "poison spec file or directory");

  std::function<void()> action;

  auto* ingest = app.add_subcommand("ingest", "list the documents and chunks of a corpus");
  fs::path ingest_dir_arg;
  ingest->add_option("dir", ingest_dir_arg)->required();
  ingest->callback([&] { action = [&] { cmd_ingest(g, ingest_dir_arg); }; });

  auto* index = app.add_subcommand("index", "index management");
  index->require_subcommand(1);
  index->add_subcommand("build", "index the corpus and save it to --index")
      ->callback([&] { action = [&] { cmd_index_build(g); }; });

  auto* chat = app.add_subcommand("chat", "ask the assistant");
  std::string question;
  bool repl = false;
  chat->add_option("question", question);
  chat->add_flag("--repl", repl, "interactive loop; :q quits");
  chat->callback([&] { action = [&] { cmd_chat(g, question, repl); }; });

  auto* poison = app.add_subcommand("poison", "craft, inject and retract poisons");
  poison->require_subcommand(1);
  fs::path spec_path;
  std::string spec_id;
  auto* craft = poison->add_subcommand("craft", "print the doctored document");
  craft->add_option("spec", spec_path)->required();
  craft->callback([&] { action = [&] { cmd_poison_craft(g, spec_path); }; });
  auto* inj = poison->add_subcommand("inject", "inject a spec into the saved index");
  inj->add_option("spec", spec_path)->required();
  inj->callback([&] { action = [&] { cmd_poison_inject(g, spec_path); }; });
  auto* ret = poison->add_subcommand("retract", "retract an injected spec");
  ret->add_option("spec_id", spec_id)->required();
  ret->callback([&] { action = [&] { cmd_poison_retract(g, spec_id); }; });
  poison->add_subcommand("list", "show the attack manifest")
      ->callback([&] { action = [&] { cmd_poison_list(g); }; });

  auto* trials = app.add_subcommand("trials", "clean vs attacked evaluation");
  trials->require_subcommand(1);
  auto* run = trials->add_subcommand("run", "run a case file and print the report");
  fs::path cases_path;
  std::optional<std::string> report;
  std::optional<fs::path> out;
  run->add_option("cases", cases_path)->required();
  run->add_option("--report", report, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  run->add_option("--out", out, "write the report here instead of stdout");
  run->callback([&] { action = [&] { cmd_trials_run(g, cases_path, report, out); }; });

  auto* srv = app.add_subcommand("serve", "start the HTTP service");
  std::optional<int> port;
  srv->add_option("--port", port)->check(CLI::Range(1, 65535));
  srv->callback([&] { action = [&] { cmd_serve(g, port); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    action();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << error_code_name(e.code()) << ": " << e.what()
              << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 2;
  }
}
