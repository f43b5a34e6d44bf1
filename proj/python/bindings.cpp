#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pdpc/anneal.hpp"
#include "pdpc/composer.hpp"
#include "pdpc/curve.hpp"
#include "pdpc/error.hpp"
#include "pdpc/partition.hpp"
#include "pdpc/pdscore.hpp"
#include "pdpc/pipeline.hpp"
#include "pdpc/refmodel.hpp"

namespace py = pybind11;
using namespace pdpc;

namespace {

struct Curve {
  PreferenceCurve c;
};

std::vector<TokenizedDoc> as_docs(const std::vector<std::vector<TokenId>>& docs) {
  std::vector<TokenizedDoc> out;
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) out.push_back({"d" + std::to_string(i), docs[i]});
  return out;
}

std::vector<ScoredId> as_scored(const std::vector<std::pair<std::string, double>>& items) {
  std::vector<ScoredId> out;
  out.reserve(items.size());
  for (const auto& [id, score] : items) out.push_back({id, score});
  return out;
}

PartitionedDataset make_partition(const std::vector<std::pair<std::string, double>>& items, std::size_t n,
                                  const std::vector<double>& quantiles) {
  return partition_by_score(as_scored(items), PartitionSpec{n, quantiles});
}

py::dict plan_to_dict(const BatchPlan& plan) {
  py::dict d;
  d["mode"] = std::string(to_string(plan.mode));
  d["batch_size"] = plan.batch_size;
  d["steps"] = plan.steps;
  d["part_sizes"] = plan.part_sizes;
  d["batch_sizes"] = plan.batch_sizes;
  d["counts"] = plan.counts;
  d["targets"] = plan.targets;
  d["constrained"] = plan.constrained;
  d["first_constrained"] = plan.first_constrained;
  return d;
}

}  // namespace

PYBIND11_MODULE(_pdpc, m) {
  m.doc() = "Perplexity-difference scoring and curriculum composition";

  static py::exception<Error> base(m, "PdpcError", PyExc_RuntimeError);
  auto subclass = [&](const char* name, PyObject* builtin) {
    const std::string qualified = std::string("pdpc._pdpc.") + name;
    py::tuple bases = py::make_tuple(base, py::handle(builtin));
    auto type = py::reinterpret_steal<py::object>(PyErr_NewException(qualified.c_str(), bases.ptr(), nullptr));
    m.attr(name) = type;
    return type.release().ptr();
  };
  static PyObject* validation = subclass("ValidationError", PyExc_ValueError);
  static PyObject* input = subclass("InputError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      PyErr_SetString(validation, e.what());
    } catch (const InputError& e) {
      PyErr_SetString(input, e.what());
    }
  });

  m.def("compute_pd", &compute_pd, py::arg("ppl_weak"), py::arg("ppl_strong"));
  m.def("spearman", [](const std::vector<double>& a, const std::vector<double>& b) { return spearman(a, b); });
  m.def("average_ranks", [](const std::vector<double>& v) { return average_ranks(v); });
  m.def("quantile", [](std::vector<double> v, double q) { return quantile_select(v, q); });

  py::class_<NgramModel>(m, "NgramModel")
      .def_static(
          "train",
          [](const std::vector<std::vector<TokenId>>& docs, std::size_t vocab_size, int order,
             std::vector<double> weights, double k_add) {
            return NgramModel::train(as_docs(docs), vocab_size, NgramConfig{order, std::move(weights), k_add});
          },
          py::arg("docs"), py::arg("vocab_size"), py::arg("order") = 2, py::arg("weights") = std::vector<double>{},
          py::arg("k_add") = 0.1)
      .def_static("uniform", &NgramModel::uniform, py::arg("vocab_size"), py::arg("order") = 1,
                  py::arg("k_add") = 1.0)
      .def_static("load", [](const std::filesystem::path& p) { return NgramModel::load(p); })
      .def("save", &NgramModel::save, py::arg("path"), py::arg("lineage") = "")
      .def_property_readonly("order", &NgramModel::order)
      .def_property_readonly("vocab_size", &NgramModel::vocab_size)
      .def("probability",
           [](const NgramModel& mdl, const std::vector<TokenId>& history, TokenId token) {
             return mdl.probability(history, token);
           })
      .def("perplexity", [](const NgramModel& mdl, const std::vector<TokenId>& t) { return mdl.perplexity(t); })
      .def("log_likelihood",
           [](const NgramModel& mdl, const std::vector<TokenId>& t) { return mdl.log_likelihood(t); });

  py::class_<Curve>(m, "Curve")
      .def("__call__", [](const Curve& c, double p) { return eval(c.c, p); })
      .def("eval", [](const Curve& c, double p) { return eval(c.c, p); })
      .def("integral", [](const Curve& c, std::size_t intervals) { return integral(c.c, intervals); },
           py::arg("intervals") = 1000)
      .def("symmetry_error", [](const Curve& c) { return check_symmetry(c.c); })
      .def("to_json", [](const Curve& c) { return curve_to_json(c.c).dump(); })
      .def_static("from_json", [](const std::string& s) { return Curve{curve_from_json(nlohmann::json::parse(s))}; })
      .def("knots",
           [](const Curve& c) {
             std::vector<std::pair<double, double>> out;
             if (const auto* p = std::get_if<PchipCurve>(&c.c))
               for (const auto& k : p->knots) out.emplace_back(k.p, k.b);
             return out;
           })
      .def("__repr__", [](const Curve& c) { return "<pdpc.Curve " + describe(c.c) + ">"; });

  m.def("linear", [](double slope) { return Curve{LinearCurve{slope}}; }, py::arg("slope") = -1.0);
  m.def("zshape", [](double lambda) { return Curve{ZShapeCurve{lambda}}; }, py::arg("lam") = 0.0);
  m.def("sshape", [](double a) { return Curve{SShapeCurve{a}}; }, py::arg("a") = 10.0);
  m.def(
      "fit_pchip",
      [](const std::vector<std::pair<double, double>>& pts, bool non_increasing) {
        std::vector<PreferencePoint> v;
        for (const auto& [p, b] : pts) v.push_back({p, b});
        return Curve{fit_pchip(v, PchipOptions{non_increasing})};
      },
      py::arg("points"), py::arg("enforce_non_increasing") = false);
  m.def("max_deviation", [](const Curve& a, const Curve& b, std::size_t n) { return max_deviation(a.c, b.c, n); },
        py::arg("f"), py::arg("g"), py::arg("points") = 1001);

  m.def(
      "partition",
      [](const std::vector<std::pair<std::string, double>>& items, std::size_t n, const std::vector<double>& q) {
        const auto parts = make_partition(items, n, q);
        std::vector<std::vector<std::string>> out;
        for (const auto& part : parts.parts) {
          out.emplace_back();
          for (const auto& mbr : part.members) out.back().push_back(mbr.doc_id);
        }
        return out;
      },
      py::arg("scores"), py::arg("n") = 2, py::arg("split_quantiles") = std::vector<double>{});

  m.def(
      "plan_batches",
      [](const std::vector<std::size_t>& sizes, std::size_t batch_size, std::optional<std::size_t> steps,
         const std::string& mode, const Curve& curve) {
        return plan_to_dict(plan_batches(sizes, batch_size, steps, ScheduleSpec{schedule_mode_from_string(mode), curve.c}));
      },
      py::arg("part_sizes"), py::arg("batch_size"), py::arg("steps") = std::nullopt, py::arg("mode") = "curriculum",
      py::arg("curve") = Curve{SShapeCurve{10.0}});

  m.def(
      "compose",
      [](const std::vector<std::pair<std::string, double>>& items, std::size_t batch_size,
         std::optional<std::size_t> steps, const std::string& mode, const Curve& curve, std::uint64_t seed,
         std::size_t n, const std::vector<double>& q) {
        const auto parts = make_partition(items, n, q);
        const auto plan =
            plan_batches(parts.sizes(), batch_size, steps, ScheduleSpec{schedule_mode_from_string(mode), curve.c});
        const auto manifest = compose(plan, parts, seed);
        const auto report = verify_manifest(manifest, parts);
        if (!report.passed()) throw ValidationError("composed manifest failed verification:\n" + report.to_text());
        return manifest.batches;
      },
      py::arg("scores"), py::arg("batch_size"), py::arg("steps") = std::nullopt, py::arg("mode") = "curriculum",
      py::arg("curve") = Curve{SShapeCurve{10.0}}, py::arg("seed") = 1, py::arg("n") = 2,
      py::arg("split_quantiles") = std::vector<double>{});

  m.def(
      "select_preference",
      [](const std::vector<std::tuple<double, double, double>>& rows) {
        std::vector<EvalResult> v;
        for (const auto& [p, beta, metric] : rows) v.push_back({p, beta, metric});
        const auto pt = select_preference(v);
        return std::make_pair(pt.p, pt.b);
      },
      py::arg("results"));
  m.def(
      "fit_and_correct",
      [](const std::vector<std::pair<double, double>>& pts, bool non_increasing) {
        std::vector<PreferencePoint> v;
        for (const auto& [p, b] : pts) v.push_back({p, b});
        auto f = fit_and_correct(v, PchipOptions{non_increasing});
        return std::make_pair(Curve{std::move(f.curve)}, f.alpha);
      },
      py::arg("points"), py::arg("enforce_non_increasing") = false);

  py::class_<Pipeline>(m, "Pipeline")
      .def(py::init([](const std::filesystem::path& config) { return Pipeline(PipelineConfig::load(config)); }),
           py::arg("config"))
      .def("ingest", &Pipeline::ingest)
      .def("train_rm", &Pipeline::train_rm)
      .def("score", &Pipeline::score)
      .def("pd", &Pipeline::pd)
      .def("partition", &Pipeline::partition)
      .def("compose", [](Pipeline& p) { return p.compose().batches; })
      .def("verify", [](Pipeline& p) { return p.verify().passed(); })
      .def("stats", &Pipeline::stats)
      .def("run_all", [](Pipeline& p) { return p.run_all().passed(); })
      .def("artifact", [](const Pipeline& p, const std::string& name) { return p.artifact(name); });
}
