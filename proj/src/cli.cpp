#include "changescout/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "changescout/cochange.hpp"
#include "changescout/detect.hpp"
#include "changescout/featurize.hpp"
#include "changescout/learn.hpp"
#include "changescout/serialize.hpp"
#include "json.hpp"

#ifndef CS_VERSION
#define CS_VERSION "0.0.0"
#endif

namespace cs {

using nlohmann::json;
namespace fs = std::filesystem;

std::string tool_version() { return CS_VERSION; }

namespace {

struct Settings {
  std::string corpus_dir;
  std::string output_dir = "cs-out";
  std::string project_key;
  std::string git_log, repo, issues, labels;
  std::string scope = "both";
  DetectorParams detector;
  std::size_t mcd_h = 0;  // 0: default
  bool mcd_reweight = false;
  CentralityParams centrality;
  std::string groups = "all";
  FeatureOptions features;
  std::string algo = "rf";
  std::size_t folds = 10;
  SmoteParams smote;
  bool no_smote = false;
  RandomForestParams rf;
  std::uint64_t seed = 0;
  std::string model;
  std::vector<std::string> commits;
  std::vector<std::string> evals;
  std::string candidates;
};

json settings_json(const Settings& s) {
  return {{"corpus_dir", s.corpus_dir},
          {"output_dir", s.output_dir},
          {"project_key", s.project_key},
          {"git_log", s.git_log},
          {"repo", s.repo},
          {"issues", s.issues},
          {"labels", s.labels},
          {"scope", s.scope},
          {"percentile", s.detector.comment_percentile},
          {"contamination", s.detector.contamination},
          {"mcd_h", s.mcd_h},
          {"mcd_reweight", s.mcd_reweight},
          {"chi2_quantile", s.detector.chi2_quantile},
          {"min_points", s.detector.min_points},
          {"log_gaps", s.detector.log_gaps},
          {"damping", s.centrality.damping},
          {"tolerance", s.centrality.tolerance},
          {"max_iterations", s.centrality.max_iterations},
          {"max_files_per_commit", s.centrality.max_files_per_commit},
          {"groups", s.groups},
          {"min_df", s.features.min_df},
          {"max_terms", s.features.max_terms},
          {"algo", s.algo},
          {"folds", s.folds},
          {"k_neighbors", s.smote.k_neighbors},
          {"target_ratio", s.smote.target_ratio},
          {"no_smote", s.no_smote},
          {"n_trees", s.rf.n_trees},
          {"max_depth", s.rf.max_depth},
          {"min_samples_leaf", s.rf.min_samples_leaf},
          {"features_per_split", s.rf.features_per_split},
          {"seed", s.seed},
          {"model", s.model},
          {"commits", s.commits},
          {"evals", s.evals},
          {"candidates", s.candidates}};
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Run {
 public:
  Run(Settings& s, std::ostream& out) : s_(s), out_(out) {}

  std::string read_input(const std::string& path) {
    if (!fs::exists(path)) throw DataError("input not found: " + path);
    auto text = read_file(path);
    inputs_[path] = sha256_hex(text);
    return text;
  }

  Corpus corpus() {
    if (s_.corpus_dir.empty()) throw UsageError("--corpus is required");
    auto c = load_corpus(s_.corpus_dir);
    for (const auto* name : {"commits.jsonl", "issues.jsonl", "links.jsonl", "revmap.json", "labels.csv"}) {
      const auto p = fs::path(s_.corpus_dir) / name;
      if (fs::exists(p)) inputs_[p.string()] = sha256_hex(read_file(p));
    }
    return c;
  }

  void write_output(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    write_file_atomic(path, content);
    outputs_[path.string()] = sha256_hex(content);
  }

  void output(const std::string& name, const std::string& content) {
    write_output(fs::path(s_.output_dir) / name, content);
  }

  void require_seed(const CLI::App& app) const {
    if (app.get_option("--seed")->count() == 0 && !seed_from_config_) {
      throw UsageError("--seed (or CS_SEED, or seed in the config file) is required for this command");
    }
  }

  void set_seed_from_config() { seed_from_config_ = true; }
  void warn(const std::string& w) { warnings_.push_back(w); }

  json manifest_inputs() const { return inputs_; }
  json manifest_outputs() const { return outputs_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::ostream& out() { return out_; }

 private:
  Settings& s_;
  std::ostream& out_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
  std::vector<std::string> warnings_;
  bool seed_from_config_ = false;
};

// Config values fill only options not given on the command line or through
// the environment.
void apply_config(CLI::App& app, const std::string& path, Run& run) {
  if (path.empty()) return;
  if (!fs::exists(path)) throw DataError("config file not found: " + path);
  const auto text = run.read_input(path);
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw DataError("config " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string name = item.name;
    std::replace(name.begin(), name.end(), '_', '-');
    auto* opt = app.get_option_no_throw("--" + name);
    if (opt == nullptr || name == "config") throw UsageError("config " + path + ": unknown key '" + item.name + "'");
    if (opt->count() > 0) continue;
    try {
      opt->add_result(item.inputs);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError("config " + path + ": bad value for '" + item.name + "': " + e.what());
    }
    if (name == "seed") run.set_seed_from_config();
  }
}

ScopeSelection parse_scope(const std::string& s) {
  const auto l = to_lower(s);
  if (l == "file") return ScopeSelection::kFile;
  if (l == "author") return ScopeSelection::kAuthor;
  if (l == "both") return ScopeSelection::kBoth;
  throw UsageError("--scope must be file, author or both");
}

/// "all" is every combination; otherwise a comma-separated list such as "CC,NL+SI".
std::vector<FeatureGroups> parse_group_list(const std::string& s) {
  if (to_lower(trim(s)) == "all") return all_group_combinations();
  std::vector<FeatureGroups> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(FeatureGroups::parse(item));
  if (out.empty()) throw UsageError("--groups is empty");
  return out;
}

FeatureGroups parse_single_groups(const std::string& s) {
  const auto list = parse_group_list(s);
  if (to_lower(trim(s)) == "all") return FeatureGroups::all();
  if (list.size() != 1) throw UsageError("this command takes one feature-group combination");
  return list.front();
}

DetectorParams detector_params(const Settings& s) {
  auto p = s.detector;
  if (s.mcd_h != 0) p.mcd_h = s.mcd_h;
  p.mcd_reweight = s.mcd_reweight;
  p.seed = s.seed;
  p.validate();
  return p;
}

TrainOptions train_options(const Settings& s) {
  TrainOptions t;
  t.algorithm = algorithm_from_string(s.algo);
  t.rf = s.rf;
  t.smote = s.smote;
  t.use_smote = !s.no_smote;
  t.rf.validate();
  t.smote.validate();
  return t;
}

std::vector<CommitFeatureRow> labeled_rows(const std::vector<CommitFeatureRow>& rows) {
  std::vector<CommitFeatureRow> out;
  for (const auto& r : rows) {
    if (r.label) out.push_back(r);
  }
  if (out.empty()) throw DataError("corpus has no labeled commits");
  return out;
}

std::string project_name(const Settings& s) {
  if (!s.project_key.empty()) return s.project_key;
  auto p = fs::path(s.corpus_dir);
  if (p.filename().empty()) p = p.parent_path();
  return p.filename().string();
}

// --- subcommands ---------------------------------------------------------------

void cmd_ingest(Settings& s, Run& run) {
  Diagnostics diag;
  std::vector<CommitRecord> commits;
  if (!s.git_log.empty()) {
    // Raw `git log` exports frame messages with \x02, which base64 never contains.
    const auto text = run.read_input(s.git_log);
    commits = text.find('\x02') != std::string::npos ? convert_raw_git_log(text, &diag) : parse_git_log(text, &diag);
  } else if (!s.repo.empty()) {
    commits = read_git_repository(s.repo, &diag);
  } else {
    throw UsageError("ingest needs --git-log or --repo");
  }
  std::vector<IssueRecord> issues;
  if (!s.issues.empty()) {
    auto parsed = parse_issue_archive(run.read_input(s.issues));
    for (const auto& e : parsed.errors) {
      diag.warn(s.issues + ":" + std::to_string(e.line) + ": skipped record: " + e.message);
    }
    issues = std::move(parsed.issues);
  }
  LinkResult links;
  Corpus corpus = build_corpus(std::move(commits), std::move(issues), s.project_key, &links);
  if (!s.labels.empty()) {
    const auto res = load_labels(run.read_input(s.labels), corpus);
    for (const auto& h : res.unresolved) diag.warn("label for unknown commit " + h);
  }
  const fs::path dir = s.corpus_dir.empty() ? fs::path(s.output_dir) / "corpus" : fs::path(s.corpus_dir);
  save_corpus(corpus, dir);
  for (const auto* name : {"commits.jsonl", "issues.jsonl", "links.jsonl", "revmap.json", "labels.csv"}) {
    run.write_output(dir / name, read_file(dir / name));
  }
  for (const auto& w : diag.warnings()) run.warn(w);
  run.out() << "commits " << corpus.commits.size() << ", issues " << corpus.issues.size() << ", links "
            << corpus.links.size() << ", revisions " << corpus.revision_map.size() << ", labels "
            << corpus.labels.size() << " -> " << dir.string() << "\n";
}

void cmd_detect(Settings& s, Run& run) {
  const auto corpus = run.corpus();
  const auto report = run_detectors(corpus, detector_params(s), parse_scope(s.scope));
  for (const auto& w : report.warnings) run.warn(w);
  run.output("candidates.json", candidates_to_json(report, corpus));
  run.out() << "reason                 # flagged\n";
  for (const auto& [reason, n] : report.flagged_per_reason) {
    std::string name(to_string(reason));
    name.resize(23, ' ');
    run.out() << name << n << "\n";
  }
  run.out() << "unique candidates      " << report.candidates.size() << "\n";
}

void cmd_graph(Settings& s, Run& run) {
  const auto corpus = run.corpus();
  s.centrality.validate();
  CoChangeGraph graph;
  for (std::size_t i = 0; i < corpus.commits.size(); ++i) graph.apply_commit(corpus.commits[i], i, s.centrality);
  const auto snap = compute_snapshot(graph, s.centrality);
  if (!snap.converged) run.warn("PageRank did not converge within max_iterations");
  run.output("graph_edges.csv", export_edges_csv(graph));
  run.output("centrality.csv", export_snapshot_csv(snap));
  run.out() << "files " << graph.node_count() << ", edges " << graph.edge_count() << "\n";
}

void cmd_featurize(Settings& s, Run& run) {
  const auto corpus = run.corpus();
  const auto groups = parse_single_groups(s.groups);
  const auto rows = build_commit_rows(corpus, s.centrality);
  const auto m = featurize_rows(rows, rows, groups, s.features);
  run.output("features.csv", features_csv(m.schema, m.rows));
  run.out() << "rows " << m.rows.size() << ", features " << m.schema.size() << " (" << groups.label() << ")\n";
}

void cmd_crossval(Settings& s, Run& run, const CLI::App& app) {
  run.require_seed(app);
  const auto corpus = run.corpus();
  const auto combos = parse_group_list(s.groups);
  CrossValOptions opts;
  opts.k = s.folds;
  opts.train = train_options(s);
  const auto rows = labeled_rows(build_commit_rows(corpus, s.centrality));
  ProjectResult result;
  result.project = project_name(s);
  for (const auto& g : combos) {
    result.reports.push_back(cross_validate(rows, g, s.features, opts, s.seed));
    for (const auto& w : result.reports.back().warnings) run.warn(g.label() + ": " + w);
  }
  const std::vector<ProjectResult> projects{result};
  const auto text = render_report(projects);
  run.output("eval.json", eval_to_json(projects));
  run.output("report.txt", text);
  run.out() << text;
}

void cmd_train(Settings& s, Run& run, const CLI::App& app) {
  run.require_seed(app);
  const auto corpus = run.corpus();
  const auto groups = parse_single_groups(s.groups);
  const auto rows = labeled_rows(build_commit_rows(corpus, s.centrality));
  const auto m = featurize_rows(rows, rows, groups, s.features);
  Diagnostics diag;
  auto model = train_model(Dataset::from_matrix(m), train_options(s), derive_seed(s.seed, "train"), &diag);
  model.vocabulary = m.vocabulary;
  model.groups = groups;
  for (const auto& w : diag.warnings()) run.warn(w);
  run.output("model.json", model_to_json(model));
  run.out() << to_string(model.algorithm) << " model on " << m.rows.size() << " rows, " << m.schema.size()
            << " features (" << groups.label() << ")\n";
}

void cmd_predict(Settings& s, Run& run) {
  if (s.model.empty()) throw UsageError("--model is required");
  const auto model = model_from_json(run.read_input(s.model));
  const auto corpus = run.corpus();
  std::vector<std::size_t> targets;
  if (s.commits.empty()) {
    for (std::size_t i = 0; i < corpus.commits.size(); ++i) targets.push_back(i);
  } else {
    for (const auto& h : s.commits) {
      const auto pos = corpus.find_commit(to_lower(trim(h)));
      if (!pos) throw DataError("unknown commit " + h);
      targets.push_back(*pos);
    }
  }
  const auto rows = build_commit_rows(corpus, s.centrality);
  const auto schema = make_schema(model.vocabulary, model.groups);
  std::string csv = "hash,label,score\n";
  for (auto i : targets) {
    NaturalLanguageFeatures nl;
    if (model.groups.nl) {
      nl.term_counts = bow_features(rows[i].message, model.vocabulary);
      nl.sentiment = sentiment_features(rows[i].message, Lexicon::bundled());
    }
    const auto fv = assemble(rows[i].hash, rows[i].si, nl, rows[i].cc, schema, model.groups);
    const auto p = model.predict(fv.values);
    const auto line = rows[i].hash + "," + std::to_string(to_int(p.label)) + "," + format_double(p.score) + "\n";
    csv += line;
    run.out() << line;
  }
  run.output("predictions.csv", csv);
}

std::string render_detection_summary(const json& doc) {
  std::string text = "Detection summary\n";
  const auto& summary = doc.at("summary");
  for (const auto& [reason, n] : summary.at("flagged").items()) {
    std::string name = reason;
    name.resize(23, ' ');
    text += "  " + name + std::to_string(n.get<std::size_t>()) + "\n";
  }
  text += "  unique candidates      " + std::to_string(summary.at("unique_candidates").get<std::size_t>()) +
          " of " + std::to_string(summary.at("commits").get<std::size_t>()) + " commits\n";
  return text;
}

void cmd_report(Settings& s, Run& run) {
  if (s.evals.empty() && s.candidates.empty()) throw UsageError("report needs --eval and/or --candidates");
  std::string text;
  if (!s.candidates.empty()) {
    try {
      text += render_detection_summary(json::parse(run.read_input(s.candidates)));
    } catch (const json::exception& e) {
      throw DataError("malformed candidate report: " + std::string(e.what()));
    }
  }
  std::vector<ProjectResult> projects;
  for (const auto& path : s.evals) {
    auto p = eval_from_json(run.read_input(path));
    projects.insert(projects.end(), p.begin(), p.end());
  }
  if (!projects.empty()) {
    if (!text.empty()) text += "\n";
    text += render_report(projects);
  }
  run.output("report.txt", text);
  run.out() << text;
}

void write_manifest(const Settings& s, const std::string& command, const Run& run, const std::string& started,
                    const std::string& status, const std::string& error) {
  json doc = {{"tool", "changescout"},
              {"version", tool_version()},
              {"command", command},
              {"config", settings_json(s)},
              {"inputs", run.manifest_inputs()},
              {"outputs", run.manifest_outputs()},
              {"started", started},
              {"finished", utc_now()},
              {"status", status},
              {"warnings", run.warnings()}};
  if (!error.empty()) doc["error"] = error;
  const auto dir = fs::path(s.output_dir);
  fs::create_directories(dir);
  write_file_atomic(dir / "manifest.json", doc.dump(2) + "\n");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const std::string started = utc_now();
  Settings s;
  std::string config_path;

  CLI::App app{"Mines a project's history for influential changes and trains classifiers to predict them."};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1, 1);
  const auto env = [](const std::string& name) {
    std::string e = "CS_";
    for (char c : name) e += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return e;
  };
  const auto opt = [&](const std::string& name, auto& var, const std::string& help) {
    return app.add_option("--" + name, var, help)->envname(env(name));
  };
  const auto flag = [&](const std::string& name, bool& var, const std::string& help) {
    return app.add_flag("--" + name, var, help)->envname(env(name));
  };

  app.add_option("--config", config_path, "TOML file with option values (keys as option names)")
      ->envname("CS_CONFIG");
  opt("corpus", s.corpus_dir, "Corpus directory");
  app.add_option("-o,--output-dir", s.output_dir, "Directory for outputs and the run manifest")
      ->envname("CS_OUTPUT_DIR")
      ->capture_default_str();
  opt("project-key", s.project_key, "Issue key prefix, e.g. LANG");
  opt("git-log", s.git_log, "Commit log file, canonical or raw git log export");
  opt("repo", s.repo, "git repository to read with git log");
  opt("issues", s.issues, "Issue archive (JSON lines)");
  opt("labels", s.labels, "CSV hash,label");
  opt("seed", s.seed, "Master seed for every random component");
  opt("percentile", s.detector.comment_percentile, "Comment-count percentile for controversial issues")
      ->capture_default_str();
  opt("contamination", s.detector.contamination, "Maximum outlier fraction per timeline")->capture_default_str();
  opt("mcd-h", s.mcd_h, "MCD subset size (0: floor((n+3)/2))");
  flag("mcd-reweight", s.mcd_reweight, "Reweight the MCD estimate at the 0.975 chi-square cutoff");
  opt("chi2-quantile", s.detector.chi2_quantile, "Chi-square quantile for outliers")->capture_default_str();
  opt("min-points", s.detector.min_points, "Minimum timeline points for an MCD fit")->capture_default_str();
  flag("log-gaps", s.detector.log_gaps, "Use log1p of gaps in days");
  opt("scope", s.scope, "Isolation scope: file, author or both")->capture_default_str();
  opt("damping", s.centrality.damping, "PageRank damping")->capture_default_str();
  opt("tolerance", s.centrality.tolerance, "PageRank L1 tolerance")->capture_default_str();
  opt("max-iterations", s.centrality.max_iterations, "PageRank iteration cap")->capture_default_str();
  opt("max-files-per-commit", s.centrality.max_files_per_commit, "Larger commits add no co-change edges")
      ->capture_default_str();
  opt("groups", s.groups, "Feature groups: all, or a list like CC,NL+SI")->capture_default_str();
  opt("min-df", s.features.min_df, "Minimum document frequency of a term")->capture_default_str();
  opt("max-terms", s.features.max_terms, "Vocabulary size cap")->capture_default_str();
  opt("algo", s.algo, "Classifier: nb or rf")->capture_default_str();
  opt("folds", s.folds, "Cross-validation folds")->capture_default_str();
  opt("k-neighbors", s.smote.k_neighbors, "SMOTE neighbors")->capture_default_str();
  opt("target-ratio", s.smote.target_ratio, "SMOTE minority/majority target")->capture_default_str();
  flag("no-smote", s.no_smote, "Disable SMOTE");
  opt("n-trees", s.rf.n_trees, "Random forest size")->capture_default_str();
  opt("max-depth", s.rf.max_depth, "Tree depth cap (0: unlimited)")->capture_default_str();
  opt("min-samples-leaf", s.rf.min_samples_leaf, "Minimum rows per leaf")->capture_default_str();
  opt("features-per-split", s.rf.features_per_split, "Features tried per split (0: ceil(sqrt(p)))")
      ->capture_default_str();
  opt("model", s.model, "Model file written by train");
  opt("commit", s.commits, "Commit hash to predict (repeatable; default all)");
  opt("eval", s.evals, "Evaluation report(s) for the report command");
  opt("candidates", s.candidates, "Candidate report for the report command");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"ingest", "Parse a commit log and issue archive into a corpus directory"},
      {"detect", "Flag candidate influential commits"},
      {"graph", "Export the co-change graph and file centralities"},
      {"featurize", "Write the feature matrix"},
      {"crossval", "Stratified cross-validation over feature-group combinations"},
      {"train", "Train a classifier on all labeled commits"},
      {"predict", "Score commits with a trained model"},
      {"report", "Render evaluation and detection reports"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  std::vector<std::string> argv_store{"changescout"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  Run runner(s, out);
  std::string command;
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    try {
      write_manifest(s, command, runner, started, "usage-error", e.what());
    } catch (const std::exception&) {
    }
    return kExitUsage;
  }

  command = app.get_subcommands().front()->get_name();
  int code = kExitOk;
  std::string status = "ok", error;
  try {
    apply_config(app, config_path, runner);
    if (command == "ingest") cmd_ingest(s, runner);
    else if (command == "detect") cmd_detect(s, runner);
    else if (command == "graph") cmd_graph(s, runner);
    else if (command == "featurize") cmd_featurize(s, runner);
    else if (command == "crossval") cmd_crossval(s, runner, app);
    else if (command == "train") cmd_train(s, runner, app);
    else if (command == "predict") cmd_predict(s, runner);
    else if (command == "report") cmd_report(s, runner);
  } catch (const UsageError& e) {
    code = kExitUsage;
    status = "usage-error";
    error = e.what();
  } catch (const DataError& e) {
    code = kExitData;
    status = "data-error";
    error = e.what();
  } catch (const fs::filesystem_error& e) {
    code = kExitData;
    status = "data-error";
    error = e.what();
  }
  for (const auto& w : runner.warnings()) err << "warning: " << w << "\n";
  if (!error.empty()) err << "error: " << error << "\n";
  try {
    write_manifest(s, command, runner, started, status, error);
  } catch (const std::exception& e) {
    err << "error: cannot write manifest: " << e.what() << "\n";
    if (code == kExitOk) code = kExitData;
  }
  return code;
}

}  // namespace cs
