#include <algorithm>
#include <cstdio>

#include "changescout/learn.hpp"

namespace cs {

void ConfusionMatrix::add(Label truth, Label predicted) {
  if (truth == Label::kInfluential) {
    ++(predicted == Label::kInfluential ? tp : fn);
  } else {
    ++(predicted == Label::kInfluential ? fp : tn);
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double f_measure(double precision, double recall) {
  const double s = precision + recall;
  return s == 0 ? 0.0 : 2 * precision * recall / s;
}

Prf prf_metrics(const ConfusionMatrix& c) {
  Prf m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f_measure = f_measure(m.precision, m.recall);
  return m;
}

Prf prf_metrics_negative(const ConfusionMatrix& c) {
  Prf m;
  m.precision = ratio(c.tn, c.tn + c.fn);
  m.recall = ratio(c.tn, c.tn + c.fp);
  m.f_measure = f_measure(m.precision, m.recall);
  return m;
}

std::vector<std::size_t> stratified_folds(const std::vector<Label>& labels, std::size_t k,
                                          std::uint64_t seed, Diagnostics* diag,
                                          std::size_t* effective_k) {
  if (k < 2) throw UsageError("k must be >= 2");
  std::array<std::vector<std::size_t>, 2> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) by_label[to_int(labels[i])].push_back(i);
  for (int l = 0; l < 2; ++l) {
    if (by_label[l].size() < 2) {
      throw DataError("label " + std::to_string(l) + " has " + std::to_string(by_label[l].size()) +
                      " rows; cross-validation needs at least 2");
    }
  }
  const std::size_t rarer = std::min(by_label[0].size(), by_label[1].size());
  const std::size_t eff = std::min(k, rarer);
  if (eff < k) {
    warn(diag, "folds reduced from " + std::to_string(k) + " to " + std::to_string(eff) +
                   " (rarer label has " + std::to_string(rarer) + " rows)");
  }
  if (effective_k != nullptr) *effective_k = eff;

  Rng rng(derive_seed(seed, "folds"));
  std::vector<std::size_t> fold(labels.size());
  std::size_t counter = 0;
  for (auto& rows : by_label) {
    rng.shuffle(rows);
    for (auto i : rows) fold[i] = counter++ % eff;
  }
  return fold;
}

void EvalReport::finalize() {
  aggregate = {};
  double f_sum = 0;
  for (const auto& f : folds) {
    aggregate += f.confusion;
    f_sum += prf_metrics(f.confusion).f_measure;
  }
  influential = prf_metrics(aggregate);
  non_influential = prf_metrics_negative(aggregate);
  mean_fold_f = folds.empty() ? 0.0 : f_sum / static_cast<double>(folds.size());
}

EvalReport cross_validate(const std::vector<Label>& labels, const FoldTransform& transform,
                          const CrossValOptions& options, std::uint64_t seed, FeatureGroups groups) {
  Diagnostics diag;
  std::size_t k = 0;
  const auto fold = stratified_folds(labels, options.k, seed, &diag, &k);

  EvalReport report;
  report.algorithm = options.train.algorithm;
  report.seed = seed;
  report.groups = groups;
  report.k = k;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < labels.size(); ++i) (fold[i] == f ? test : train).push_back(i);
    const auto [train_set, test_set] = transform(train, test);

    Diagnostics fold_diag;
    FoldResult res;
    const auto model = train_model(train_set, options.train, derive_seed(seed, "fold", f), &fold_diag,
                                   &res.synthetic_rows);
    for (const auto& w : fold_diag.warnings()) diag.warn("fold " + std::to_string(f) + ": " + w);
    res.train_rows = train_set.size();
    for (std::size_t i = 0; i < test_set.size(); ++i) {
      if (test_set.provenance[i] != Provenance::kReal) {
        throw UsageError("synthetic rows cannot be evaluated");
      }
      res.confusion.add(*test_set.rows[i].label, model.predict(test_set.rows[i].values).label);
      ++res.test_rows;
    }
    report.folds.push_back(res);
  }
  report.warnings = diag.warnings();
  report.finalize();
  return report;
}

EvalReport cross_validate(const Dataset& data, const CrossValOptions& options, std::uint64_t seed) {
  data.validate();
  std::vector<std::size_t> real;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.provenance[i] == Provenance::kReal) real.push_back(i);
  }
  const Dataset base = data.select(real);
  std::vector<Label> labels;
  for (const auto& r : base.rows) labels.push_back(*r.label);
  return cross_validate(
      labels,
      [&](const std::vector<std::size_t>& train, const std::vector<std::size_t>& test) {
        return std::make_pair(base.select(train), base.select(test));
      },
      options, seed);
}

EvalReport cross_validate(const std::vector<CommitFeatureRow>& rows, FeatureGroups groups,
                          const FeatureOptions& features, const CrossValOptions& options,
                          std::uint64_t seed, const Lexicon& lexicon) {
  std::vector<CommitFeatureRow> labeled;
  for (const auto& r : rows) {
    if (r.label) labeled.push_back(r);
  }
  std::vector<Label> labels;
  for (const auto& r : labeled) labels.push_back(*r.label);
  return cross_validate(
      labels,
      [&](const std::vector<std::size_t>& train, const std::vector<std::size_t>& test) {
        std::vector<CommitFeatureRow> train_rows, test_rows;
        for (auto i : train) train_rows.push_back(labeled[i]);
        for (auto i : test) test_rows.push_back(labeled[i]);
        auto train_m = featurize_rows(train_rows, train_rows, groups, features, lexicon);
        auto test_m = featurize_rows(test_rows, train_rows, groups, features, lexicon);
        return std::make_pair(Dataset::from_matrix(train_m), Dataset::from_matrix(test_m));
      },
      options, seed, groups);
}

std::vector<EvalReport> cross_validate_groups(const std::vector<CommitFeatureRow>& rows,
                                              const FeatureOptions& features,
                                              const CrossValOptions& options, std::uint64_t seed,
                                              const Lexicon& lexicon) {
  std::vector<EvalReport> out;
  for (const auto& g : all_group_combinations()) {
    out.push_back(cross_validate(rows, g, features, options, seed, lexicon));
  }
  return out;
}

ProjectAverages average_projects(const std::vector<ProjectResult>& projects,
                                 const std::string& group_label) {
  ProjectAverages avg;
  ConfusionMatrix pooled;
  for (const auto& p : projects) {
    const auto it = std::find_if(p.reports.begin(), p.reports.end(),
                                 [&](const EvalReport& r) { return r.groups.label() == group_label; });
    if (it == p.reports.end()) continue;
    ++avg.projects;
    avg.mean.precision += it->influential.precision;
    avg.mean.recall += it->influential.recall;
    avg.mean.f_measure += it->influential.f_measure;
    pooled += it->aggregate;
  }
  if (avg.projects > 0) {
    const double n = static_cast<double>(avg.projects);
    avg.mean.precision /= n;
    avg.mean.recall /= n;
    avg.mean.f_measure /= n;
  }
  avg.f_of_means = f_measure(avg.mean.precision, avg.mean.recall);
  avg.pooled = prf_metrics(pooled);
  return avg;
}

namespace {

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string render_report(const std::vector<ProjectResult>& projects) {
  std::string out;
  out += pad("Project", 22) + pad("Metrics", 8) + "| Influential Class          | Non-Influential Class\n";
  out += pad("", 30) + "| Precision Recall F-Measure | Precision Recall F-Measure\n";
  for (const auto& p : projects) {
    bool first = true;
    for (const auto& r : p.reports) {
      char row[128];
      std::snprintf(row, sizeof row, "| %9.1f %6.1f %9.1f | %9.1f %6.1f %9.1f\n", 100 * r.influential.precision,
                    100 * r.influential.recall, 100 * r.influential.f_measure, 100 * r.non_influential.precision,
                    100 * r.non_influential.recall, 100 * r.non_influential.f_measure);
      out += pad(first ? p.project : "", 22) + pad(r.groups.label(), 8) + row;
      first = false;
    }
  }
  const auto avg = average_projects(projects, "ALL");
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "\nInfluential class, ALL features, %zu project(s)\n"
                "  per-project average F   %5.1f  (P %5.1f, R %5.1f)\n"
                "  F of averaged P and R   %5.1f\n"
                "  pooled confusion F      %5.1f  (P %5.1f, R %5.1f)\n",
                avg.projects, 100 * avg.mean.f_measure, 100 * avg.mean.precision, 100 * avg.mean.recall,
                100 * avg.f_of_means, 100 * avg.pooled.f_measure, 100 * avg.pooled.precision,
                100 * avg.pooled.recall);
  return out + buf;
}

}  // namespace cs
