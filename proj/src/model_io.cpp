#include "changescout/serialize.hpp"
#include "json.hpp"

namespace cs {

using nlohmann::json;

namespace {

std::string_view group_name(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::kCC: return "CC";
    case FeatureGroup::kNL: return "NL";
    case FeatureGroup::kSI: return "SI";
  }
  return "";
}

FeatureGroup group_from_name(const std::string& s) {
  if (s == "CC") return FeatureGroup::kCC;
  if (s == "NL") return FeatureGroup::kNL;
  if (s == "SI") return FeatureGroup::kSI;
  throw DataError("unknown feature group '" + s + "'");
}

json evidence_json(const EvidenceItem& e) {
  json j = {{"reason", std::string(to_string(e.reason))}};
  if (const auto* is = std::get_if<IssueEvidence>(&e.payload)) {
    j["issue_key"] = is->issue_key;
    j["comment_count"] = is->comment_count;
  } else if (const auto* iso = std::get_if<IsolationEvidence>(&e.payload)) {
    j["scope"] = iso->scope == Scope::kFile ? "file" : "author";
    j["entity"] = iso->entity;
    j["gap_prev_days"] = iso->gap_prev;
    j["gap_next_days"] = iso->gap_next;
    j["distance2"] = iso->distance2;
  } else if (const auto* ref = std::get_if<ReferenceEvidence>(&e.payload)) {
    j["referring_hash"] = ref->referring_hash;
    j["token"] = ref->token;
  }
  return j;
}

json confusion_json(const ConfusionMatrix& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

ConfusionMatrix confusion_from(const json& j) {
  return {j.at("tp").get<std::uint64_t>(), j.at("fp").get<std::uint64_t>(),
          j.at("tn").get<std::uint64_t>(), j.at("fn").get<std::uint64_t>()};
}

json prf_json(const Prf& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f_measure", m.f_measure}};
}

json schema_json(const FeatureSchema& s) {
  json groups = json::array();
  for (auto g : s.groups) groups.push_back(std::string(group_name(g)));
  return {{"names", s.names}, {"groups", std::move(groups)}};
}

FeatureSchema schema_from(const json& j) {
  FeatureSchema s;
  s.names = j.at("names").get<std::vector<std::string>>();
  for (const auto& g : j.at("groups")) s.groups.push_back(group_from_name(g.get<std::string>()));
  if (s.names.size() != s.groups.size()) throw DataError("model schema: names and groups differ in length");
  return s;
}

}  // namespace

std::string candidates_to_json(const DetectionReport& report, const Corpus& corpus) {
  json cands = json::array();
  for (const auto& c : report.candidates) {
    json reasons = json::array();
    for (auto r : c.reasons) reasons.push_back(std::string(to_string(r)));
    json evidence = json::array();
    for (const auto& e : c.evidence) evidence.push_back(evidence_json(e));
    cands.push_back({{"commit_hash", c.commit_hash}, {"reasons", std::move(reasons)},
                     {"evidence", std::move(evidence)}});
  }
  json flagged = json::object();
  for (const auto& [reason, n] : report.flagged_per_reason) flagged[std::string(to_string(reason))] = n;
  json summary = {{"commits", corpus.commits.size()},
                  {"issues", corpus.issues.size()},
                  {"flagged", std::move(flagged)},
                  {"unique_candidates", report.candidates.size()},
                  {"ambiguous_prefixes", report.ambiguous_prefixes}};
  json doc = {{"candidates", std::move(cands)}, {"summary", std::move(summary)}, {"warnings", report.warnings}};
  return doc.dump(2) + '\n';
}

std::string model_to_json(const TrainedModel& m) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["algorithm"] = std::string(to_string(m.algorithm));
  doc["groups"] = m.groups.label();
  doc["seed"] = m.seed;
  doc["schema"] = schema_json(m.schema());
  doc["vocabulary"] = {{"terms", m.vocabulary.terms},
                       {"document_frequency", m.vocabulary.document_frequency},
                       {"built_from", m.vocabulary.built_from}};
  doc["standardizer"] = {{"mean", m.standardizer.mean}, {"scale", m.standardizer.scale}};
  json params = {{"smote", {{"k_neighbors", m.smote.k_neighbors},
                            {"target_ratio", m.smote.target_ratio},
                            {"seed", m.smote.seed}}}};
  if (m.nb) {
    json classes = json::array();
    for (int l = 0; l < 2; ++l) {
      const auto& c = m.nb->classes[l];
      classes.push_back({{"label", l}, {"prior", c.prior}, {"mean", c.mean}, {"variance", c.variance}});
    }
    params["variance_smoothing"] = 1e-9;
    doc["parameters"] = {{"epsilon", m.nb->epsilon}, {"classes", std::move(classes)}};
  } else if (m.rf) {
    const auto& p = m.rf->params;
    params["random_forest"] = {{"n_trees", p.n_trees},
                               {"max_depth", p.max_depth},
                               {"min_samples_leaf", p.min_samples_leaf},
                               {"features_per_split", p.features_per_split},
                               {"bootstrap", p.bootstrap},
                               {"seed", p.seed}};
    json trees = json::array();
    for (const auto& t : m.rf->trees) {
      json nodes = json::array();
      for (const auto& n : t.nodes) {
        nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.counts[0], n.counts[1]}));
      }
      trees.push_back(std::move(nodes));
    }
    doc["trees"] = std::move(trees);
  }
  doc["params"] = std::move(params);
  return doc.dump() + '\n';
}

TrainedModel model_from_json(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("unsupported model format_version " + std::to_string(version));
    }
    TrainedModel m;
    m.algorithm = algorithm_from_string(doc.at("algorithm").get<std::string>());
    m.groups = FeatureGroups::parse(doc.at("groups").get<std::string>());
    m.seed = doc.at("seed").get<std::uint64_t>();
    const auto schema = schema_from(doc.at("schema"));
    const auto& v = doc.at("vocabulary");
    m.vocabulary.terms = v.at("terms").get<std::vector<std::string>>();
    m.vocabulary.document_frequency = v.at("document_frequency").get<std::map<std::string, std::size_t>>();
    m.vocabulary.built_from = v.at("built_from").get<std::size_t>();
    m.standardizer.mean = doc.at("standardizer").at("mean").get<std::vector<double>>();
    m.standardizer.scale = doc.at("standardizer").at("scale").get<std::vector<double>>();
    if (m.standardizer.mean.size() != schema.size() || m.standardizer.scale.size() != schema.size()) {
      throw DataError("model standardizer does not match the schema");
    }
    if (make_schema(m.vocabulary, m.groups) != schema) {
      throw DataError("model schema does not match its vocabulary and groups");
    }
    const auto& params = doc.at("params");
    m.smote.k_neighbors = params.at("smote").at("k_neighbors").get<std::size_t>();
    m.smote.target_ratio = params.at("smote").at("target_ratio").get<double>();
    m.smote.seed = params.at("smote").at("seed").get<std::uint64_t>();

    if (m.algorithm == Algorithm::kNaiveBayes) {
      GaussianNBModel nb;
      nb.schema = schema;
      const auto& p = doc.at("parameters");
      nb.epsilon = p.at("epsilon").get<double>();
      for (const auto& c : p.at("classes")) {
        const int l = c.at("label").get<int>();
        if (l != 0 && l != 1) throw DataError("model class label must be 0 or 1");
        auto& stats = nb.classes[l];
        stats.prior = c.at("prior").get<double>();
        stats.mean = c.at("mean").get<std::vector<double>>();
        stats.variance = c.at("variance").get<std::vector<double>>();
        if (stats.mean.size() != schema.size() || stats.variance.size() != schema.size()) {
          throw DataError("model class parameters do not match the schema");
        }
      }
      m.nb = std::move(nb);
    } else {
      RandomForestModel rf;
      rf.schema = schema;
      const auto& p = params.at("random_forest");
      rf.params.n_trees = p.at("n_trees").get<std::size_t>();
      rf.params.max_depth = p.at("max_depth").get<std::size_t>();
      rf.params.min_samples_leaf = p.at("min_samples_leaf").get<std::size_t>();
      rf.params.features_per_split = p.at("features_per_split").get<std::size_t>();
      rf.params.bootstrap = p.at("bootstrap").get<bool>();
      rf.params.seed = p.at("seed").get<std::uint64_t>();
      for (const auto& t : doc.at("trees")) {
        DecisionTree tree;
        for (const auto& n : t) {
          TreeNode node;
          node.feature = n.at(0).get<int>();
          node.threshold = n.at(1).get<double>();
          node.left = n.at(2).get<std::uint32_t>();
          node.right = n.at(3).get<std::uint32_t>();
          node.counts = {n.at(4).get<std::uint32_t>(), n.at(5).get<std::uint32_t>()};
          tree.nodes.push_back(node);
        }
        const auto size = tree.nodes.size();
        if (size == 0) throw DataError("model contains an empty tree");
        for (const auto& node : tree.nodes) {
          if (!node.is_leaf() && (static_cast<std::size_t>(node.feature) >= schema.size() ||
                                  node.left >= size || node.right >= size)) {
            throw DataError("model tree node out of range");
          }
        }
        rf.trees.push_back(std::move(tree));
      }
      if (rf.trees.empty()) throw DataError("random forest model has no trees");
      m.rf = std::move(rf);
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  }
}

std::string eval_to_json(const std::vector<ProjectResult>& projects) {
  json ps = json::array();
  for (const auto& p : projects) {
    json reports = json::array();
    for (const auto& r : p.reports) {
      json folds = json::array();
      for (const auto& f : r.folds) {
        json fj = confusion_json(f.confusion);
        fj["train_rows"] = f.train_rows;
        fj["synthetic_rows"] = f.synthetic_rows;
        fj["test_rows"] = f.test_rows;
        folds.push_back(std::move(fj));
      }
      reports.push_back({{"groups", r.groups.label()},
                         {"algorithm", std::string(to_string(r.algorithm))},
                         {"seed", r.seed},
                         {"k", r.k},
                         {"folds", std::move(folds)},
                         {"aggregate", confusion_json(r.aggregate)},
                         {"influential", prf_json(r.influential)},
                         {"non_influential", prf_json(r.non_influential)},
                         {"mean_fold_f", r.mean_fold_f},
                         {"warnings", r.warnings}});
    }
    ps.push_back({{"project", p.project}, {"reports", std::move(reports)}});
  }
  const auto avg = average_projects(projects, "ALL");
  json summary = {{"groups", "ALL"},
                  {"projects", avg.projects},
                  {"per_project_average", prf_json(avg.mean)},
                  {"f_of_average_precision_recall", avg.f_of_means},
                  {"pooled", prf_json(avg.pooled)}};
  json doc = {{"format_version", kEvalFormatVersion}, {"projects", std::move(ps)}, {"summary", std::move(summary)}};
  return doc.dump(2) + '\n';
}

std::vector<ProjectResult> eval_from_json(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    if (doc.at("format_version").get<int>() != kEvalFormatVersion) {
      throw DataError("unsupported eval format_version");
    }
    std::vector<ProjectResult> out;
    for (const auto& pj : doc.at("projects")) {
      ProjectResult p;
      p.project = pj.at("project").get<std::string>();
      for (const auto& rj : pj.at("reports")) {
        EvalReport r;
        r.groups = FeatureGroups::parse(rj.at("groups").get<std::string>());
        r.algorithm = algorithm_from_string(rj.at("algorithm").get<std::string>());
        r.seed = rj.at("seed").get<std::uint64_t>();
        r.k = rj.at("k").get<std::size_t>();
        for (const auto& fj : rj.at("folds")) {
          FoldResult f;
          f.confusion = confusion_from(fj);
          f.train_rows = fj.at("train_rows").get<std::size_t>();
          f.synthetic_rows = fj.at("synthetic_rows").get<std::size_t>();
          f.test_rows = fj.at("test_rows").get<std::size_t>();
          r.folds.push_back(f);
        }
        r.warnings = rj.at("warnings").get<std::vector<std::string>>();
        r.finalize();
        p.reports.push_back(std::move(r));
      }
      out.push_back(std::move(p));
    }
    return out;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  }
}

}  // namespace cs
