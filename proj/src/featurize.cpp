#include "changescout/featurize.hpp"

#include <algorithm>
#include <charconv>

namespace cs {

namespace {

bool is_ascii_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

double parse_double(std::string_view s) {
  double v = 0;
  const auto t = trim(s);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    throw DataError("not a number: '" + t + "'");
  }
  return v;
}

}  // namespace

bool FeatureGroups::contains(FeatureGroup g) const {
  switch (g) {
    case FeatureGroup::kCC: return cc;
    case FeatureGroup::kNL: return nl;
    case FeatureGroup::kSI: return si;
  }
  return false;
}

std::string FeatureGroups::label() const {
  if (cc && nl && si) return "ALL";
  std::string out;
  const auto append = [&](bool on, std::string_view name) {
    if (!on) return;
    if (!out.empty()) out += ' ';
    out += name;
  };
  append(cc, "CC");
  append(nl, "NL");
  append(si, "SI");
  return out;
}

FeatureGroups FeatureGroups::parse(std::string_view text) {
  FeatureGroups g;
  std::string tok;
  const auto flush = [&] {
    if (tok.empty()) return;
    const auto up = [&] {
      std::string u = tok;
      for (char& c : u) {
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
      }
      return u;
    }();
    if (up == "CC") g.cc = true;
    else if (up == "NL") g.nl = true;
    else if (up == "SI") g.si = true;
    else if (up == "ALL") g = all();
    else throw UsageError("unknown feature group '" + tok + "' (expected CC, NL, SI or ALL)");
    tok.clear();
  };
  for (char c : text) {
    if (c == '+' || c == ' ' || c == '-' || c == '_') flush();
    else tok += c;
  }
  flush();
  if (g.empty()) throw UsageError("no feature group selected");
  return g;
}

std::vector<FeatureGroups> all_group_combinations() {
  return {{true, false, false}, {false, true, false}, {false, false, true}, {true, true, false},
          {true, false, true},  {false, true, true},  {true, true, true}};
}

const std::set<std::string, std::less<>>& bundled_stopwords() {
  static const auto words = [] {
    std::set<std::string, std::less<>> s;
    std::string_view text = resources::stopwords_text();
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      const auto w = trim(text.substr(pos, nl - pos));
      if (!w.empty() && w[0] != '#') s.insert(to_lower(w));
      pos = nl + 1;
    }
    return s;
  }();
  return words;
}

std::vector<std::string> tokenize(std::string_view message, bool drop_stopwords) {
  const auto& stop = bundled_stopwords();
  std::vector<std::string> out;
  std::string cur;
  const auto flush = [&] {
    if (cur.size() >= 2 && !(drop_stopwords && stop.contains(cur))) out.push_back(cur);
    cur.clear();
  };
  for (char c : message) {
    if (is_ascii_alnum(c)) {
      cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view term) const {
  const auto it = std::lower_bound(terms.begin(), terms.end(), term);
  if (it == terms.end() || *it != term) return std::nullopt;
  return static_cast<std::size_t>(it - terms.begin());
}

Vocabulary build_vocabulary(std::span<const std::string> messages, std::size_t min_df,
                            std::size_t max_terms) {
  std::map<std::string, std::size_t> df;
  for (const auto& m : messages) {
    auto toks = tokenize(m);
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    for (auto& t : toks) ++df[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [term, count] : df) {
    if (count >= min_df) kept.emplace_back(term, count);
  }
  if (kept.size() > max_terms) {
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    kept.resize(max_terms);
  }
  Vocabulary v;
  v.built_from = messages.size();
  for (auto& [term, count] : kept) {
    v.document_frequency.emplace(term, count);
    v.terms.push_back(term);
  }
  std::sort(v.terms.begin(), v.terms.end());
  return v;
}

std::vector<double> bow_features(std::string_view message, const Vocabulary& vocabulary) {
  std::vector<double> counts(vocabulary.terms.size(), 0.0);
  for (const auto& t : tokenize(message)) {
    if (const auto i = vocabulary.index_of(t)) counts[*i] += 1.0;
  }
  return counts;
}

Lexicon Lexicon::parse(std::string_view text) {
  Lexicon lex;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string_view::npos) {
      throw DataError("lexicon line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
    }
    LexiconEntry e{parse_double(line.substr(tab1 + 1, tab2 - tab1 - 1)),
                   parse_double(line.substr(tab2 + 1))};
    if (e.polarity < -1 || e.polarity > 1 || e.subjectivity < 0 || e.subjectivity > 1) {
      throw DataError("lexicon line " + std::to_string(line_no) + ": value out of range");
    }
    lex.add(to_lower(trim(line.substr(0, tab1))), e);
  }
  return lex;
}

const Lexicon& Lexicon::bundled() {
  static const Lexicon lex = parse(resources::lexicon_text());
  return lex;
}

void Lexicon::add(std::string word, LexiconEntry entry) { entries_[std::move(word)] = entry; }

const LexiconEntry* Lexicon::find(std::string_view word) const {
  const auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

LexiconEntry sentiment_features(std::string_view message, const Lexicon& lexicon) {
  double pol = 0, subj = 0;
  std::size_t hits = 0;
  for (const auto& t : tokenize(message, false)) {
    if (const auto* e = lexicon.find(t)) {
      pol += e->polarity;
      subj += e->subjectivity;
      ++hits;
    }
  }
  if (hits == 0) return {};
  return {pol / static_cast<double>(hits), subj / static_cast<double>(hits)};
}

StructuralFeatures structural_features(const CommitRecord& commit) {
  StructuralFeatures s;
  s.n_files = static_cast<double>(commit.files.size());
  for (const auto& f : commit.files) {
    s.lines_added += static_cast<double>(f.lines_added);
    s.lines_removed += static_cast<double>(f.lines_removed);
  }
  return s;
}

FeatureSchema make_schema(const Vocabulary& vocabulary, FeatureGroups groups) {
  FeatureSchema schema;
  const auto add = [&](std::string name, FeatureGroup g) {
    schema.names.push_back(std::move(name));
    schema.groups.push_back(g);
  };
  if (groups.cc) {
    for (auto n : kCoChangeNames) add(std::string(n), FeatureGroup::kCC);
  }
  if (groups.nl) {
    for (const auto& t : vocabulary.terms) add(std::string(kTermPrefix) + t, FeatureGroup::kNL);
    add("polarity", FeatureGroup::kNL);
    add("subjectivity", FeatureGroup::kNL);
  }
  if (groups.si) {
    for (auto n : kStructuralNames) add(std::string(n), FeatureGroup::kSI);
  }
  return schema;
}

FeatureVector assemble(std::string_view commit_hash, const StructuralFeatures& si,
                       const NaturalLanguageFeatures& nl, const CoChangeFeatures& cc,
                       const FeatureSchema& schema, FeatureGroups groups, std::optional<Label> label) {
  if (groups.empty()) throw UsageError("assemble: no feature group enabled");
  FeatureVector fv;
  fv.commit_hash = std::string(commit_hash);
  fv.label = label;
  auto& v = fv.values;
  v.reserve(schema.size());
  if (groups.cc) v.insert(v.end(), {cc.d_min_pr, cc.d_max_pr, cc.d_sum_betweenness, cc.d_sum_closeness});
  if (groups.nl) {
    v.insert(v.end(), nl.term_counts.begin(), nl.term_counts.end());
    v.push_back(nl.sentiment.polarity);
    v.push_back(nl.sentiment.subjectivity);
  }
  if (groups.si) v.insert(v.end(), {si.n_files, si.lines_added, si.lines_removed});
  if (v.size() != schema.size()) {
    throw UsageError("assemble: " + std::to_string(v.size()) + " values for a schema of " +
                     std::to_string(schema.size()));
  }
  return fv;
}

std::vector<CommitFeatureRow> build_commit_rows(const Corpus& corpus, const CentralityParams& params) {
  const auto cc = cochange_feature_history(corpus.commits, params);
  std::vector<CommitFeatureRow> rows;
  rows.reserve(corpus.commits.size());
  for (std::size_t i = 0; i < corpus.commits.size(); ++i) {
    const auto& c = corpus.commits[i];
    CommitFeatureRow r;
    r.hash = c.hash;
    if (const auto it = corpus.labels.find(c.hash); it != corpus.labels.end()) r.label = it->second;
    r.message = c.message;
    r.si = structural_features(c);
    r.cc = cc[i];
    rows.push_back(std::move(r));
  }
  return rows;
}

FeatureMatrix featurize_rows(std::span<const CommitFeatureRow> rows,
                             std::span<const CommitFeatureRow> vocab_rows, FeatureGroups groups,
                             const FeatureOptions& options, const Lexicon& lexicon) {
  FeatureMatrix m;
  if (groups.nl) {
    std::vector<std::string> messages;
    messages.reserve(vocab_rows.size());
    for (const auto& r : vocab_rows) messages.push_back(r.message);
    m.vocabulary = build_vocabulary(messages, options.min_df, options.max_terms);
  }
  m.schema = make_schema(m.vocabulary, groups);
  m.rows.reserve(rows.size());
  for (const auto& r : rows) {
    NaturalLanguageFeatures nl;
    if (groups.nl) {
      nl.term_counts = bow_features(r.message, m.vocabulary);
      nl.sentiment = sentiment_features(r.message, lexicon);
    }
    m.rows.push_back(assemble(r.hash, r.si, nl, r.cc, m.schema, groups, r.label));
  }
  return m;
}

std::string features_csv(const FeatureSchema& schema, std::span<const FeatureVector> rows) {
  std::string out = "hash,label";
  for (const auto& n : schema.names) out += ',' + csv_escape(n);
  out += '\n';
  for (const auto& r : rows) {
    out += r.commit_hash + ',';
    if (r.label) out += std::to_string(to_int(*r.label));
    for (double v : r.values) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

}  // namespace cs
