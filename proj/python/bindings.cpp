#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "xqm/analysis.hpp"
#include "xqm/corpus.hpp"
#include "xqm/error.hpp"
#include "xqm/metrics.hpp"
#include "xqm/pipeline.hpp"
#include "xqm/synthesis.hpp"

namespace py = pybind11;
using namespace xqm;

namespace {

std::vector<Direction> directions_of(const std::vector<std::string>& names) {
  std::vector<Direction> out;
  for (const auto& n : names) out.push_back(Direction::parse(n));
  return out;
}

pipeline::RunConfig config_from(const py::dict& kw) {
  pipeline::RunConfig c;
  for (const auto& [key, value] : kw) {
    const auto k = key.cast<std::string>();
    if (k == "data_dir") c.data_dir = value.cast<std::string>();
    else if (k == "out_dir") c.out_dir = value.cast<std::string>();
    else if (k == "templates_dir") c.templates_dir = value.cast<std::string>();
    else if (k == "metrics_path") c.metrics_path = value.cast<std::string>();
    else if (k == "calibration_path") c.calibration_path = value.cast<std::string>();
    else if (k == "directions") c.directions = directions_of(value.cast<std::vector<std::string>>());
    else if (k == "single_annotator") c.single_annotator = directions_of(value.cast<std::vector<std::string>>());
    else if (k == "required_votes") c.required_votes = value.cast<int>();
    else if (k == "k_max") c.k_max = value.cast<int>();
    else if (k == "seed") c.seed = value.cast<std::uint64_t>();
    else if (k == "threads") c.threads = value.cast<int>();
    else if (k == "n_per_direction") c.n_per_direction = value.cast<int>();
    else if (k == "with_replacement") c.with_replacement = value.cast<bool>();
    else if (k == "system_repeats") c.system_repeats = value.cast<int>();
    else if (k == "mono_repeats") c.mono_repeats = value.cast<int>();
    else if (k == "lgn_repeats") c.lgn_repeats = value.cast<int>();
    else if (k == "levels") c.levels = value.cast<std::vector<int>>();
    else if (k == "targets") c.targets = value.cast<std::vector<double>>();
    else if (k == "use_lgn") c.use_lgn = value.cast<bool>();
    else if (k == "lang_counts") c.lang_counts = value.cast<std::vector<int>>();
    else if (k == "stability_repeats") c.stability_repeats = value.cast<std::vector<int>>();
    else throw UsageError("unknown option: " + k);
  }
  return c;
}

using Stage = pipeline::StageResult (*)(const pipeline::RunConfig&);

py::dict stage_dict(const pipeline::StageResult& r) {
  py::dict d;
  d["stage"] = r.stage;
  std::vector<std::string> outputs;
  for (const auto& p : r.outputs) outputs.push_back(p.string());
  d["outputs"] = outputs;
  d["cached"] = r.cached;
  d["summary"] = r.summary;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = XQM_VERSION;

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<Error> usage(m, "UsageError", base.ptr());
  static py::exception<Error> integrity(m, "IntegrityError", base.ptr());
  static py::exception<Error> scorer(m, "ScorerError", base.ptr());
  static py::exception<Error> capacity(m, "CapacityError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::Usage: usage(e.what()); break;
        case ErrorKind::Integrity: integrity(e.what()); break;
        case ErrorKind::Scorer: scorer(e.what()); break;
        case ErrorKind::Capacity: capacity(e.what()); break;
      }
    }
  });

  py::class_<Edit>(m, "Edit")
      .def(py::init<std::size_t, std::size_t, std::string>(), py::arg("start"), py::arg("end"),
           py::arg("replacement"))
      .def_readwrite("start", &Edit::start)
      .def_readwrite("end", &Edit::end)
      .def_readwrite("replacement", &Edit::replacement)
      .def("__eq__", [](const Edit& a, const Edit& b) { return a == b; })
      .def("__repr__", [](const Edit& e) {
        return "Edit(" + std::to_string(e.start) + ", " + std::to_string(e.end) + ", '" + e.replacement + "')";
      });

  m.def("parse_tagged", [](std::string_view text) {
    const auto t = parse_tagged(text);
    return py::make_tuple(t.detagged, t.tag_open, t.tag_close);
  }, "Strip the <v>...</v> pair; returns (text, open, close) in code points.");
  m.def("derive_edit", &derive_edit, py::arg("base"), py::arg("candidate"), py::arg("tag_open"),
        py::arg("tag_close"));
  m.def("apply_edits", &apply_edits, py::arg("base"), py::arg("edits"));
  m.def("edits_overlap", &edits_overlap);
  m.def("mqm_deduction", &mqm_deduction);

  m.def("enumerate_pseudo_translations", [](const std::string& reference, const std::vector<Edit>& edits, int k_max) {
    const auto dir = Direction::parse("xx-yy");
    const SegmentPair pair{"p", dir, "", reference};
    std::vector<ErrorCandidate> cs;
    for (std::size_t i = 0; i < edits.size(); ++i) {
      ErrorCandidate c;
      c.id = "c" + std::to_string(i);
      c.pair_id = pair.pair_id;
      c.direction = dir;
      c.edit = edits[i];
      c.filter.accepted = true;
      cs.push_back(c);
    }
    std::vector<std::pair<int, std::string>> out;
    for (const auto& t : enumerate_pseudo_translations(pair, cs, k_max)) out.emplace_back(t.error_count, t.text);
    return out;
  }, py::arg("reference"), py::arg("edits"), py::arg("k_max") = kMaxErrors,
     "All (error_count, text) pseudo translations from non-overlapping subsets.");

  m.def("chrf_score", [](std::string_view hyp, std::string_view ref, int char_n, int word_n, double beta) {
    return chrf_score(hyp, ref, ChrfConfig{char_n, word_n, beta});
  }, py::arg("hypothesis"), py::arg("reference"), py::arg("char_n") = 6, py::arg("word_n") = 2,
     py::arg("beta") = 2.0);

  m.def("kendall_tau_b", [](const std::vector<double>& x, const std::vector<double>& y) {
    return kendall_tau_b(x, y);
  });
  m.def("coefficient_of_variation", [](const std::vector<double>& v) { return coefficient_of_variation(v); });
  m.def("paired_t_test", [](const std::vector<double>& a, const std::vector<double>& b) {
    const auto r = paired_t_test(a, b);
    return py::make_tuple(r.t, r.df, r.p_two_tailed);
  }, "Returns (t, df, two-tailed p).");

  for (const auto& [name, fn] : std::initializer_list<std::pair<const char*, Stage>>{
           {"run_ingest", &pipeline::run_ingest},   {"run_synth", &pipeline::run_synth},
           {"run_prompts", &pipeline::run_prompts}, {"run_assemble", &pipeline::run_assemble},
           {"run_score", &pipeline::run_score},     {"run_fit_lgn", &pipeline::run_fit_lgn},
           {"run_analyze", &pipeline::run_analyze}}) {
    m.def(name, [fn = fn](const py::kwargs& kw) {
      const auto c = config_from(kw);
      pipeline::StageResult r;
      {
        py::gil_scoped_release release;
        r = fn(c);
      }
      return stage_dict(r);
    });
  }
  m.def("run_all", [](const py::kwargs& kw) {
    const auto c = config_from(kw);
    std::vector<pipeline::StageResult> rs;
    {
      py::gil_scoped_release release;
      rs = pipeline::run_all(c);
    }
    py::list out;
    for (const auto& r : rs) out.append(stage_dict(r));
    return out;
  });
}
