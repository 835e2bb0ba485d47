#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "wordorder/errors.h"
#include "wordorder/features.h"
#include "wordorder/judgments.h"
#include "wordorder/ngram.h"
#include "wordorder/pairrank.h"
#include "wordorder/pipeline.h"
#include "wordorder/relation_map.h"
#include "wordorder/stats.h"
#include "wordorder/treebank.h"
#include "wordorder/variants.h"

namespace py = pybind11;
using namespace wordorder;

namespace {

std::vector<std::string> reason_names(const EligibilityReport &r) {
  std::vector<std::string> out;
  for (EligibilityFailure f : r.reasons) out.emplace_back(to_string(f));
  return out;
}

std::vector<Predictor> predictors_of(const std::vector<std::string> &names) {
  std::vector<Predictor> out;
  for (const std::string &n : names) out.push_back(parse_predictor(n));
  return out;
}

std::optional<std::filesystem::path> optional_path(const py::dict &d, const char *key) {
  if (!d.contains(key) || d[key].is_none()) return std::nullopt;
  return std::filesystem::path(d[key].cast<std::string>());
}

TrigramModel::WordId symbol_id(const TrigramModel &model, std::string_view word) {
  if (word == TrigramModel::kBosSymbol) return TrigramModel::kBos;
  if (word == TrigramModel::kEosSymbol) return TrigramModel::kEos;
  return model.id(word);
}

ExperimentConfig config_from_dict(const py::dict &d) {
  ExperimentConfig c;
  for (const auto &t : d["treebanks"].cast<std::vector<std::string>>()) c.treebanks.emplace_back(t);
  c.relation_map = optional_path(d, "relations");
  c.lm_corpus = optional_path(d, "lm_corpus");
  c.lm_model = optional_path(d, "lm_model");
  c.pcfg_sidecar = optional_path(d, "pcfg_sidecar");
  c.lstm_sidecar = optional_path(d, "lstm_sidecar");
  if (d.contains("lm_min_count")) c.lm_min_count = d["lm_min_count"].cast<long long>();
  if (d.contains("variant_cap")) c.variant_cap = d["variant_cap"].cast<std::size_t>();
  if (d.contains("variant_seed")) c.variant_seed = d["variant_seed"].cast<std::uint64_t>();
  if (d.contains("filter_variants")) c.filter_variants = d["filter_variants"].cast<bool>();
  if (d.contains("predictors")) c.predictors = predictors_of(d["predictors"].cast<std::vector<std::string>>());
  if (d.contains("folds")) c.folds = d["folds"].cast<std::size_t>();
  if (d.contains("cv_seed")) c.cv_seed = d["cv_seed"].cast<std::uint64_t>();
  if (d.contains("judgment_items")) c.judgment_items = d["judgment_items"].cast<std::size_t>();
  if (d.contains("judgment_seed")) c.judgment_seed = d["judgment_seed"].cast<std::uint64_t>();
  if (d.contains("output_dir")) c.output_dir = d["output_dir"].cast<std::string>();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Word-order variants, cognitive predictors and pairwise ranking";
  m.attr("__version__") = std::string(kArtifactVersion);

  PyObject *error = py::register_exception<Error>(m, "Error").ptr();
  py::register_exception<ParseError>(m, "ParseError", error);
  py::register_exception<StructureError>(m, "StructureError", error);
  py::register_exception<PreconditionError>(m, "PreconditionError", error);
  py::register_exception<ConfigError>(m, "ConfigError", error);
  py::register_exception<FormatError>(m, "FormatError", error);
  py::register_exception<AlignmentError>(m, "AlignmentError", error);
  py::register_exception<AnnotationError>(m, "AnnotationError", error);
  py::register_exception<TrainingError>(m, "TrainingError", error);
  py::register_exception<StatisticsError>(m, "StatisticsError", error);
  py::register_exception<UsageError>(m, "UsageError", error);
  py::register_exception<IterationLimitError>(m, "IterationLimitError", error);
  py::register_exception<SeparationError>(m, "SeparationError", error);
  py::register_exception<StageError>(m, "StageError", error);

  py::class_<RelationMap>(m, "RelationMap")
      .def(py::init<>())
      .def_static("load", &RelationMap::load, py::arg("path"))
      .def_static("parse", [](const std::string &text) {
        std::istringstream in(text);
        return RelationMap::parse(in);
      })
      .def("serialize", &RelationMap::serialize)
      .def_readwrite("exclude_punct", &RelationMap::exclude_punct);

  py::class_<Token>(m, "Token")
      .def_readonly("index", &Token::index)
      .def_readonly("form", &Token::form)
      .def_readonly("lemma", &Token::lemma)
      .def_readonly("coarse_pos", &Token::coarse_pos)
      .def_readonly("fine_pos", &Token::fine_pos)
      .def_readonly("features", &Token::features)
      .def_readonly("head", &Token::head)
      .def_readonly("relation", &Token::relation)
      .def("__repr__", [](const Token &t) { return "<Token " + std::to_string(t.index) + " " + t.form + ">"; });

  py::class_<DepTree>(m, "DepTree")
      .def_property_readonly("sentence_id", &DepTree::sentence_id)
      .def_property_readonly("tokens", [](const DepTree &t) { return t.tokens(); })
      .def_property_readonly("root_index", &DepTree::root_index)
      .def_property_readonly("text", &DepTree::text)
      .def_property_readonly("newdoc", &DepTree::newdoc)
      .def("__len__", &DepTree::size)
      .def("to_conllu", [](const DepTree &t) {
        std::ostringstream out;
        write_tree(out, t);
        return out.str();
      });

  m.def("parse_treebank", [](const std::string &text) {
    std::istringstream in(text);
    return parse_treebank(in);
  }, py::arg("text"));
  m.def("load_treebank", &load_treebank, py::arg("path"));
  m.def("is_projective", &is_projective, py::arg("tree"));
  m.def("check_eligibility", [](const DepTree &t, const RelationMap &c) {
    const EligibilityReport r = check_eligibility(t, c);
    return py::make_tuple(r.eligible, reason_names(r));
  }, py::arg("tree"), py::arg("relations") = RelationMap{});
  m.def("dependency_length", &dependency_length, py::arg("tree"), py::arg("relations") = RelationMap{});

  py::class_<OrderedSentence>(m, "OrderedSentence")
      .def_property_readonly("id", &OrderedSentence::id)
      .def_readonly("reference_id", &OrderedSentence::reference_id)
      .def_readonly("tree", &OrderedSentence::tree)
      .def_readonly("permutation", &OrderedSentence::permutation)
      .def_property_readonly("origin", [](const OrderedSentence &s) { return std::string(to_string(s.origin)); })
      .def_property_readonly("order_type",
                             [](const OrderedSentence &s) { return std::string(to_string(s.order_type)); })
      .def_property_readonly("text", [](const OrderedSentence &s) { return s.tree.text(); })
      .def_property_readonly("constituent_relations", [](const OrderedSentence &s) {
        std::vector<std::string> out;
        for (const Constituent &c : s.constituents) out.push_back(c.relation);
        return out;
      });

  m.def("make_reference", &make_reference, py::arg("tree"), py::arg("relations") = RelationMap{});
  m.def("generate_variants", &generate_variants, py::arg("tree"), py::arg("relations") = RelationMap{},
        py::arg("cap") = kDefaultVariantCap, py::arg("seed") = 1);

  m.def("information_status", [](const OrderedSentence &target, const std::optional<DepTree> &context,
                                 const RelationMap &c) {
    DiscoursePair pair{context ? context->tokens() : std::vector<Token>{}, target};
    return annotate_information_status(pair, c).score;
  }, py::arg("sentence"), py::arg("context") = py::none(), py::arg("relations") = RelationMap{});

  py::class_<TrigramModel>(m, "TrigramModel")
      .def_static("train", [](const std::vector<std::vector<std::string>> &corpus, long long min_count) {
        TrigramOptions o;
        o.min_count = min_count;
        return TrigramModel::train(corpus, o);
      }, py::arg("corpus"), py::arg("min_count") = 2)
      .def_static("load", [](const std::string &text) {
        std::istringstream in(text);
        return TrigramModel::load(in);
      })
      .def("save", [](const TrigramModel &model) {
        std::ostringstream out;
        model.save(out);
        return out.str();
      })
      .def("probability", [](const TrigramModel &model, const std::string &u, const std::string &v,
                             const std::string &w) {
        return model.probability(symbol_id(model, u), symbol_id(model, v), symbol_id(model, w));
      }, py::arg("u"), py::arg("v"), py::arg("w"))
      .def("sentence_surprisal", [](const TrigramModel &model, const std::vector<std::string> &words) {
        return sentence_surprisal(model, words);
      })
      .def_property_readonly("symbols", [](const TrigramModel &model) {
        std::vector<std::string> out;
        for (TrigramModel::WordId i : model.predicted_symbols()) out.push_back(model.symbol(i));
        return out;
      })
      .def_property_readonly("vocabulary_size", &TrigramModel::symbol_count);

  m.def("featurize", [](const OrderedSentence &target, const std::optional<DepTree> &context,
                        const TrigramModel &model, const RelationMap &c) {
    DiscoursePair pair{context ? context->tokens() : std::vector<Token>{}, target};
    const FeatureVector f = featurize(pair, model, c);
    return py::dict(py::arg("deplen") = f.dependency_length, py::arg("is") = f.is_score,
                    py::arg("trigram") = f.trigram_surprisal);
  }, py::arg("sentence"), py::arg("context"), py::arg("model"), py::arg("relations") = RelationMap{});

  py::class_<PairInstance>(m, "PairInstance")
      .def(py::init([](std::string ref_id, std::string var_id, std::vector<double> delta, int label,
                       const std::string &construction) {
             PairInstance p{std::move(ref_id), std::move(var_id), std::move(delta), label,
                            parse_construction(construction)};
             return p;
           }),
           py::arg("ref_id"), py::arg("var_id"), py::arg("delta"), py::arg("label"),
           py::arg("construction") = "SOV>SOV")
      .def_readonly("ref_id", &PairInstance::ref_id)
      .def_readonly("var_id", &PairInstance::var_id)
      .def_readonly("delta", &PairInstance::delta)
      .def_readonly("label", &PairInstance::label)
      .def_property_readonly("construction", [](const PairInstance &p) { return to_string(p.construction); });

  py::class_<RegressionFit>(m, "RegressionFit")
      .def_readonly("names", &RegressionFit::names)
      .def_readonly("coefficients", &RegressionFit::coefficients)
      .def_readonly("std_errors", &RegressionFit::std_errors)
      .def_readonly("z_values", &RegressionFit::z_values)
      .def_readonly("p_values", &RegressionFit::p_values)
      .def_readonly("vif", &RegressionFit::vif)
      .def_readonly("log_likelihood", &RegressionFit::log_likelihood)
      .def_readonly("n", &RegressionFit::n)
      .def_readonly("iterations", &RegressionFit::iterations)
      .def_readonly("separated", &RegressionFit::separated)
      .def("table", [](const RegressionFit &f) {
        std::ostringstream out;
        write_fit_table(out, f);
        return out.str();
      });

  m.def("fit_logistic", [](const Eigen::MatrixXd &x, const Eigen::VectorXd &y, std::vector<std::string> names,
                           bool intercept) {
    FitOptions o;
    o.intercept = intercept;
    return fit_logistic(x, y, std::move(names), o);
  }, py::arg("x"), py::arg("y"), py::arg("names"), py::arg("intercept") = true);
  m.def("compute_vif", py::overload_cast<const Eigen::MatrixXd &>(&compute_vif), py::arg("x"));
  m.def("likelihood_ratio_test", [](const RegressionFit &full, const RegressionFit &reduced) {
    const LikelihoodRatioTest t = likelihood_ratio_test(full, reduced);
    return py::dict(py::arg("chi_square") = t.chi_square, py::arg("df") = t.df, py::arg("p_value") = t.p_value);
  }, py::arg("full"), py::arg("reduced"));
  m.def("mcnemar_exact_p", &mcnemar_exact_p, py::arg("b"), py::arg("c"));
  m.def("mcnemar_test", [](const std::vector<bool> &a, const std::vector<bool> &b) {
    const McNemarResult r = mcnemar_test(a, b);
    return py::make_tuple(r.b, r.c, r.p_value);
  }, py::arg("a"), py::arg("b"));

  py::class_<CvReport>(m, "CvReport")
      .def_readonly("k", &CvReport::k)
      .def_readonly("seed", &CvReport::seed)
      .def_readonly("fold", &CvReport::fold)
      .def_readonly("probability", &CvReport::probability)
      .def_readonly("predicted", &CvReport::predicted)
      .def_readonly("correct", &CvReport::correct)
      .def_readonly("accuracy_percent", &CvReport::accuracy_percent)
      .def_property_readonly("subsets", [](const CvReport &r) {
        py::dict d;
        for (const SubsetAccuracy &a : r.subsets)
          d[py::str(std::string(to_string(a.subset)))] = a.percent ? py::object(py::float_(*a.percent)) : py::none();
        return d;
      });

  m.def("kfold_cv", [](const std::vector<PairInstance> &instances, const std::vector<std::string> &columns,
                       const std::optional<std::vector<std::string>> &use, std::size_t k, std::uint64_t seed) {
    const auto available = predictors_of(columns);
    const auto wanted = use ? predictors_of(*use) : available;
    CvOptions o;
    o.k = k;
    o.seed = seed;
    return kfold_cv(instances, select_predictors(available, wanted), o);
  }, py::arg("instances"), py::arg("columns"), py::arg("use") = py::none(), py::arg("k") = 10, py::arg("seed") = 1);

  m.def("run_pipeline", [](const py::dict &config) {
    const PipelineResult r = run_pipeline(config_from_dict(config));
    py::dict out;
    out["config_hash"] = r.config_hash;
    out["sentences"] = r.sentences;
    out["eligible"] = r.eligible;
    out["instances"] = r.instances.size();
    out["cv_accuracy"] = r.cv.accuracy_percent;
    py::dict dist;
    for (const DistributionRow &row : r.distribution.rows)
      dist[py::str(std::string(to_string(row.order_type)))] = py::make_tuple(row.references, row.variants);
    out["distribution"] = dist;
    std::vector<std::string> outputs;
    for (const auto &p : r.outputs) outputs.push_back(p.string());
    out["outputs"] = outputs;
    out["fit"] = r.fit;
    return out;
  }, py::arg("config"));
}
