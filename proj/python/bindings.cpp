#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <optional>
#include <string>

#include "ragbreaker/config.hpp"
#include "ragbreaker/error.hpp"
#include "ragbreaker/eval.hpp"
#include "ragbreaker/json_io.hpp"
#include "ragbreaker/session.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace ragbreaker;

namespace {

// Structured results cross the boundary as plain dicts and lists, using the
// same JSON shapes the service returns.
py::object to_py(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

json from_py(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

PipelineConfig pipeline_config(const std::optional<fs::path>& config,
                               std::optional<std::size_t> k) {
  AppConfig app = load_config(config);
  if (k) app.pipeline.k = *k;
  validate(app);
  return app.pipeline;
}

EmbedderConfig hashed(std::size_t dim, std::uint64_t seed) {
  EmbedderConfig c;
  c.dim = dim;
  c.hash_seed = seed;
  return c;
}

json outcome_json(const QueryOutcome& o) {
  return {{"answer",
           {{"text", o.answer.text},
            {"generator_id", o.answer.generator_id},
            {"context_chunk_ids", o.answer.context_chunk_ids}}},
          {"trace", o.trace}};
}

py::object results_or_report(const std::vector<TrialResult>& results,
                             const std::optional<std::string>& report) {
  if (report) return py::str(render_report(results, parse_report_format(*report)));
  return to_py(json(results));
}

class PySession {
 public:
  PySession(const fs::path& corpus, std::optional<fs::path> config,
            std::optional<std::size_t> k, std::optional<fs::path> index) {
    auto pipeline = pipeline_config(config, k);
    auto docs = ingest_dir(corpus);
    if (index && fs::exists(*index)) {
      session_ = RedTeamSession::open(pipeline, docs, *index);
    } else {
      session_ = std::make_unique<RedTeamSession>(pipeline, docs);
    }
  }

  py::object chat(const std::string& question, std::optional<std::size_t> k) {
    QueryOutcome o;
    {
      py::gil_scoped_release release;
      o = session_->chat(question, k);
    }
    return to_py(outcome_json(o));
  }
  py::object inject(const py::dict& spec) {
    return to_py(json(session_->inject(poison_spec_from_json(from_py(spec)))));
  }
  py::object retract(const std::string& spec_id) {
    return to_py(json(session_->retract(spec_id)));
  }
  py::object manifest() const { return to_py(json(session_->manifest())); }
  py::object corpus() const {
    json arr = json::array();
    for (const auto* d : session_->snapshot()->store.documents()) {
      arr.push_back(document_summary(*d));
    }
    return to_py(arr);
  }
  std::uint64_t index_version() const { return session_->snapshot()->index.version(); }
  py::object run_trials(const fs::path& cases, const std::optional<std::string>& report) {
    std::vector<TrialResult> results;
    {
      py::gil_scoped_release release;
      results = session_->run_trials(load_trial_cases(cases));
    }
    return results_or_report(results, report);
  }
  void save(const fs::path& index_file) const { session_->save(index_file); }

 private:
  std::unique_ptr<RedTeamSession> session_;
};

}  // namespace

PYBIND11_MODULE(_ragbreaker, m) {
  m.doc() = "Native core of the ragbreaker red-team harness";

  // Raised with `.code` (the error code name) and `.http_status` attached.
  static py::handle error_type =
      PyErr_NewException("ragbreaker._ragbreaker.RagbreakerError", PyExc_RuntimeError, nullptr);
  m.attr("RagbreakerError") = error_type;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string name(error_code_name(e.code()));
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(name + ": " + e.what());
      exc.attr("code") = name;
      exc.attr("http_status") = http_status(e.code());
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def("tokenize", &tokenize, py::arg("text"));
  m.def(
      "embed_text",
      [](const std::string& text, std::size_t dim, std::uint64_t seed) {
        const auto v = embed_text(text, hashed(dim, seed)).values();
        return std::vector<double>(v.begin(), v.end());
      },
      py::arg("text"), py::arg("dim") = 1024, py::arg("seed") = 0);
  m.def(
      "cosine",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return cosine(EmbeddingVector(a), EmbeddingVector(b));
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "bertscore",
      [](const std::string& candidate, const std::string& reference, std::size_t dim) {
        return to_py(json(bertscore(candidate, reference, hashed(dim, 0))));
      },
      py::arg("candidate"), py::arg("reference"), py::arg("dim") = 1024);
  m.def("percent_drop", &percent_drop, py::arg("clean"), py::arg("attacked"));
  m.def("percent_drop_exact", &percent_drop_exact, py::arg("clean"), py::arg("attacked"));
  m.def("make_adversarial_query", &make_adversarial_query, py::arg("trigger"),
        py::arg("question"));
  m.def(
      "craft_poison_document",
      [](const py::dict& spec) {
        return to_py(json(craft_poison_document(poison_spec_from_json(from_py(spec)))));
      },
      py::arg("spec"));
  m.def(
      "run_trial_suite",
      [](const fs::path& cases, const fs::path& poisons, const fs::path& corpus,
         std::optional<fs::path> config, std::optional<std::size_t> k,
         std::optional<std::string> report) {
        const auto pipeline = pipeline_config(config, k);
        std::vector<TrialResult> results;
        {
          py::gil_scoped_release release;
          results = run_trial_suite(load_trial_cases(cases), load_poison_specs(poisons),
                                    ingest_dir(corpus), pipeline);
        }
        return results_or_report(results, report);
      },
      py::arg("cases"), py::arg("poisons"), py::arg("corpus"),
      py::arg("config") = py::none(), py::arg("k") = py::none(),
      py::arg("report") = py::none());

  py::class_<PySession>(m, "Session")
      .def(py::init<const fs::path&, std::optional<fs::path>, std::optional<std::size_t>,
                    std::optional<fs::path>>(),
           py::arg("corpus"), py::arg("config") = py::none(), py::arg("k") = py::none(),
           py::arg("index") = py::none())
      .def("chat", &PySession::chat, py::arg("question"), py::arg("k") = py::none())
      .def("inject", &PySession::inject, py::arg("spec"))
      .def("retract", &PySession::retract, py::arg("spec_id"))
      .def("manifest", &PySession::manifest)
      .def("corpus", &PySession::corpus)
      .def_property_readonly("index_version", &PySession::index_version)
      .def("run_trials", &PySession::run_trials, py::arg("cases"),
           py::arg("report") = py::none())
      .def("save", &PySession::save, py::arg("index_file"));
}
