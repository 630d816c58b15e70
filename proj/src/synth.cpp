#include "changescout/synth.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace cs {

namespace {

constexpr std::int64_t kEpoch = 1262304000;  // 2010-01-01T00:00:00Z
constexpr std::int64_t kDay = 86400;
constexpr std::size_t kRegular = 300;
constexpr std::size_t kGroups = 10;
constexpr std::size_t kAuthors = 5;
constexpr std::size_t kFileIsolated = 150;
constexpr std::size_t kHotIssue = 17;
constexpr std::size_t kIssues = 50;

const char* const kVerbs[] = {"Fix", "Improve", "Refactor", "Update", "Simplify", "Document", "Handle", "Tidy"};
const char* const kObjects[] = {"parser",  "buffer", "encoder", "stream",    "cache",     "iterator",
                                "codec",   "reader", "writer",  "tokenizer", "scheduler", "logger"};
const char* const kContexts[] = {"for empty input",   "when closing streams", "in threaded use",
                                 "on malformed data", "to avoid overflow",    "for unicode text"};
const char* const kModules[] = {"io", "net", "text", "util", "codec", "cli", "core", "http", "json", "xml"};
const char* const kClasses[] = {"Reader", "Writer"};

struct Draft {
  std::int64_t ts = 0;
  std::size_t author = 0;  // kAuthors is the rare author
  std::vector<FileChange> files;
  std::optional<std::size_t> regular;  // day index for regular commits
  std::size_t rare_index = 0;
};

std::string random_hash(Rng& rng) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string h;
  while (h.size() < 40) {
    auto v = rng.next();
    for (int i = 0; i < 16 && h.size() < 40; ++i, v >>= 4) h += kHex[v & 15];
  }
  return h;
}

FileChange change(std::string path, Rng& rng) {
  return {std::move(path), 1 + rng.index(40), rng.index(20), FileStatus::kModified};
}

std::string ordinary_message(Rng& rng) {
  return std::string(kVerbs[rng.index(std::size(kVerbs))]) + " " + kObjects[rng.index(std::size(kObjects))] +
         " " + kContexts[rng.index(std::size(kContexts))];
}

}  // namespace

PlantedFixture make_planted_fixture(const FixtureOptions& options) {
  if (!is_valid_project_key(options.project_key)) throw UsageError("invalid project key " + options.project_key);
  Rng rng(derive_seed(options.seed, "fixture"));
  PlantedFixture fx;
  fx.project_key = options.project_key;

  std::vector<Draft> drafts;
  for (std::size_t i = 0; i < kRegular; ++i) {
    Draft d;
    d.ts = kEpoch + static_cast<std::int64_t>(i) * kDay;
    d.author = i % kAuthors;
    d.regular = i;
    const auto g = i % kGroups;
    for (const auto* cls : kClasses) {
      d.files.push_back(change(std::string("src/main/java/org/proj/") + kModules[g] + "/" + cls + ".java", rng));
    }
    if (i < 20 || i >= kRegular - 20 || i == kFileIsolated) d.files.push_back(change("build.gradle", rng));
    drafts.push_back(std::move(d));
  }
  std::vector<std::size_t> rare_days;
  for (std::size_t i = 0; i < 20; ++i) rare_days.push_back(i);
  rare_days.push_back(100);
  for (std::size_t i = 180; i < 200; ++i) rare_days.push_back(i);
  for (std::size_t r = 0; r < rare_days.size(); ++r) {
    Draft d;
    d.ts = kEpoch + static_cast<std::int64_t>(rare_days[r]) * kDay + kDay / 2;
    d.author = kAuthors;
    d.rare_index = r;
    d.files.push_back(change("docs/notes/note-" + std::to_string(r) + ".txt", rng));
    drafts.push_back(std::move(d));
  }
  std::sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) { return a.ts < b.ts; });

  std::vector<std::string> hashes(drafts.size());
  std::map<std::size_t, std::size_t> pos_of_day;  // regular day -> position
  std::size_t rare_isolated_pos = 0;
  for (std::size_t p = 0; p < drafts.size(); ++p) {
    hashes[p] = random_hash(rng);
    if (drafts[p].regular) pos_of_day[*drafts[p].regular] = p;
    if (drafts[p].author == kAuthors && rare_days[drafts[p].rare_index] == 100) rare_isolated_pos = p;
  }
  const auto rev = [](std::size_t pos) { return 1000 + pos; };
  const auto key = [&](std::size_t n) { return options.project_key + "-" + std::to_string(n); };

  std::vector<std::string> messages(drafts.size());
  for (std::size_t p = 0; p < drafts.size(); ++p) {
    messages[p] = ordinary_message(rng);
    if (drafts[p].regular && *drafts[p].regular % 7 == 3) {
      auto n = 1 + rng.index(kIssues);
      if (n == kHotIssue) n = kHotIssue + 1;
      messages[p] += " (" + key(n) + ")";
    }
  }
  const auto day = [&](std::size_t d) { return pos_of_day.at(d); };
  messages[day(60)] = "Revert part of " + hashes[day(50)].substr(0, 8) + " which broke the codec";
  messages[day(70)] = "Follow-up to " + hashes[day(60)].substr(0, 8) + ": restore the reader";
  messages[day(230)] = "Port fix from r" + std::to_string(rev(day(220))) + " to the writer";
  messages[day(240)] = "Amend r" + std::to_string(rev(day(230))) + " after review";
  messages[day(120)] = "Rework the stream scheduler " + key(kHotIssue);
  messages[day(125)] = "Finish scheduler rework for " + key(kHotIssue);

  static const char* const kNames[] = {"Alice Moreau", "Bo Lindqvist", "Chidi Okafor", "Dana Ruiz",
                                       "Eun-ji Park", "Rowan Vale"};
  for (std::size_t p = 0; p < drafts.size(); ++p) {
    CommitRecord c;
    c.hash = hashes[p];
    c.author_name = kNames[drafts[p].author];
    c.author_email = "dev" + std::to_string(drafts[p].author) + "@proj.example.org";
    c.timestamp = drafts[p].ts;
    c.message = messages[p] + "\n\ngit-svn-id: https://svn.example.org/repos/proj/trunk@" +
                std::to_string(rev(p)) + " 13f79535-47bb-0310-9956-ffa450edef68\n";
    c.files = std::move(drafts[p].files);
    fx.commits.push_back(std::move(c));
  }

  std::vector<std::uint64_t> counts;
  for (std::size_t n = 1; n <= kIssues; ++n) counts.push_back(2 + rng.index(5));
  std::vector<std::uint64_t> others;
  for (std::size_t n = 1; n <= kIssues; ++n) {
    if (n != kHotIssue) others.push_back(counts[n - 1]);
  }
  std::sort(others.begin(), others.end());
  counts[kHotIssue - 1] = 10 * others[others.size() / 2];
  for (std::size_t n = 1; n <= kIssues; ++n) {
    IssueRecord is;
    is.key = key(n);
    is.created = kEpoch + static_cast<std::int64_t>(n) * 5 * kDay;
    is.resolved = is.created + 3 * kDay;
    is.comment_count = counts[n - 1];
    fx.issues.push_back(std::move(is));
  }

  const auto plant = [&](std::size_t pos, Reason r) { fx.planted[hashes[pos]].insert(r); };
  plant(day(120), Reason::kControversialIssue);
  plant(day(125), Reason::kControversialIssue);
  plant(day(kFileIsolated), Reason::kIsolatedFile);
  plant(rare_isolated_pos, Reason::kIsolatedAuthor);
  plant(day(50), Reason::kReferenced);
  plant(day(60), Reason::kReferenced);
  plant(day(220), Reason::kReferenced);
  plant(day(230), Reason::kReferenced);

  for (const auto& [hash, reasons] : fx.planted) fx.labels[hash] = Label::kInfluential;
  std::vector<std::size_t> pool;
  for (std::size_t p = 0; p < fx.commits.size(); ++p) {
    if (!fx.planted.contains(hashes[p])) pool.push_back(p);
  }
  rng.shuffle(pool);
  for (std::size_t i = 0; i < std::min(options.labeled_negatives, pool.size()); ++i) {
    fx.labels[hashes[pool[i]]] = Label::kNonInfluential;
  }
  return fx;
}

std::string labels_csv(const std::map<std::string, Label>& labels) {
  std::string out = "hash,label\n";
  for (const auto& [hash, label] : labels) out += hash + "," + std::to_string(to_int(label)) + "\n";
  return out;
}

std::string issues_jsonl(const std::vector<IssueRecord>& issues) {
  std::string out;
  for (const auto& is : issues) {
    nlohmann::json j = {{"key", is.key}, {"created", is.created}, {"comment_count", is.comment_count}};
    j["resolved"] = is.resolved ? nlohmann::json(*is.resolved) : nlohmann::json(nullptr);
    if (is.comment_bodies) j["comments"] = *is.comment_bodies;
    out += j.dump() + "\n";
  }
  return out;
}

Dataset make_gaussian_dataset(const GaussianOptions& options) {
  if (options.rows < 4 || options.dims == 0) throw UsageError("gaussian dataset needs rows >= 4 and dims >= 1");
  if (!(options.minority_fraction > 0 && options.minority_fraction < 1)) {
    throw UsageError("minority_fraction must be in (0, 1)");
  }
  Rng rng(derive_seed(options.seed, "gaussian"));
  const auto minority = static_cast<std::size_t>(
      std::llround(options.minority_fraction * static_cast<double>(options.rows)));
  std::vector<std::size_t> order(options.rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  Dataset data;
  for (std::size_t j = 0; j < options.dims; ++j) {
    data.schema.names.push_back("x" + std::to_string(j));
    data.schema.groups.push_back(FeatureGroup::kSI);
  }
  std::vector<FeatureVector> rows(options.rows);
  for (std::size_t i = 0; i < options.rows; ++i) {
    const bool positive = i < minority;
    FeatureVector& r = rows[order[i]];
    r.label = positive ? Label::kInfluential : Label::kNonInfluential;
    for (std::size_t j = 0; j < options.dims; ++j) {
      r.values.push_back(rng.normal() + (positive ? options.separation : 0.0));
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "row-%04zu", i);
    rows[i].commit_hash = name;
    data.add(std::move(rows[i]));
  }
  return data;
}

}  // namespace cs
