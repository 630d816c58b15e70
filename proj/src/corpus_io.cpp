#include <fstream>
#include <set>
#include <sstream>

#include "changescout/ingest.hpp"
#include "json.hpp"

namespace cs {

using nlohmann::json;

namespace {

json commit_to_json(const CommitRecord& c) {
  json files = json::array();
  for (const auto& f : c.files) {
    files.push_back({{"path", f.path},
                     {"lines_added", f.lines_added},
                     {"lines_removed", f.lines_removed},
                     {"status", std::string(to_string(f.status))}});
  }
  json j = {{"hash", c.hash},
            {"author_name", c.author_name},
            {"author_email", c.author_email},
            {"timestamp", c.timestamp},
            {"message", c.message},
            {"files", std::move(files)}};
  j["svn_revision"] = c.svn_revision ? json(*c.svn_revision) : json(nullptr);
  return j;
}

CommitRecord commit_from_json(const json& j) {
  CommitRecord c;
  c.hash = j.at("hash").get<std::string>();
  if (!is_commit_hash(c.hash)) throw DataError("commits.jsonl: malformed hash " + c.hash);
  c.author_name = j.at("author_name").get<std::string>();
  c.author_email = j.at("author_email").get<std::string>();
  c.timestamp = j.at("timestamp").get<std::int64_t>();
  if (c.timestamp <= 0) throw DataError("commits.jsonl: non-positive timestamp for " + c.hash);
  c.message = j.at("message").get<std::string>();
  for (const auto& f : j.at("files")) {
    FileChange fc;
    fc.path = f.at("path").get<std::string>();
    fc.lines_added = f.at("lines_added").get<std::uint64_t>();
    fc.lines_removed = f.at("lines_removed").get<std::uint64_t>();
    fc.status = file_status_from_string(f.at("status").get<std::string>());
    if (fc.path.empty()) throw DataError("commits.jsonl: empty path in " + c.hash);
    if (fc.status == FileStatus::kBinary && (fc.lines_added != 0 || fc.lines_removed != 0)) {
      throw DataError("commits.jsonl: binary file with line counts in " + c.hash);
    }
    c.files.push_back(std::move(fc));
  }
  if (j.contains("svn_revision") && !j["svn_revision"].is_null()) {
    c.svn_revision = j["svn_revision"].get<std::uint64_t>();
  }
  return c;
}

json issue_to_json(const IssueRecord& is) {
  json j = {{"key", is.key}, {"created", is.created}, {"comment_count", is.comment_count}};
  j["resolved"] = is.resolved ? json(*is.resolved) : json(nullptr);
  if (is.comment_bodies) j["comments"] = *is.comment_bodies;
  return j;
}

template <typename F>
void for_each_jsonl(const std::filesystem::path& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      f(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string commits;
  for (const auto& c : corpus.commits) commits += commit_to_json(c).dump() + '\n';
  write_file_atomic(dir / "commits.jsonl", commits);

  std::string issues;
  for (const auto& is : corpus.issues) issues += issue_to_json(is).dump() + '\n';
  write_file_atomic(dir / "issues.jsonl", issues);

  std::string links;
  for (const auto& l : corpus.links) {
    links += json{{"commit_hash", l.commit_hash},
                  {"issue_key", l.issue_key},
                  {"source", std::string(to_string(l.source))}}
                 .dump() +
             '\n';
  }
  write_file_atomic(dir / "links.jsonl", links);

  json revmap = json::object();
  for (const auto& [rev, hash] : corpus.revision_map) revmap[std::to_string(rev)] = hash;
  write_file_atomic(dir / "revmap.json", revmap.dump(2) + '\n');

  std::string labels = "hash,label\n";
  for (const auto& [hash, label] : corpus.labels) {
    labels += hash + ',' + std::to_string(to_int(label)) + '\n';
  }
  write_file_atomic(dir / "labels.csv", labels);
}

Corpus load_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("corpus directory not found: " + dir.string());
  std::vector<CommitRecord> commits;
  for_each_jsonl(dir / "commits.jsonl", [&](const json& j) { commits.push_back(commit_from_json(j)); });

  std::vector<IssueRecord> issues;
  if (std::filesystem::exists(dir / "issues.jsonl")) {
    auto parsed = parse_issue_archive(read_file(dir / "issues.jsonl"));
    if (!parsed.errors.empty()) {
      const auto& e = parsed.errors.front();
      throw DataError("issues.jsonl:" + std::to_string(e.line) + ": " + e.message);
    }
    issues = std::move(parsed.issues);
  }

  Corpus corpus = build_corpus(std::move(commits), std::move(issues), "");
  std::set<std::string> issue_keys;
  for (const auto& is : corpus.issues) issue_keys.insert(is.key);

  if (std::filesystem::exists(dir / "links.jsonl")) {
    for_each_jsonl(dir / "links.jsonl", [&](const json& j) {
      IssueLink l;
      l.commit_hash = j.at("commit_hash").get<std::string>();
      l.issue_key = j.at("issue_key").get<std::string>();
      const auto src = j.value("source", std::string("message-key"));
      l.source = src == "explicit-import" ? LinkSource::kExplicitImport : LinkSource::kMessageKey;
      if (!corpus.find_commit(l.commit_hash) || !issue_keys.contains(l.issue_key)) {
        throw DataError("links.jsonl: link " + l.commit_hash + " -> " + l.issue_key +
                        " references an unknown commit or issue");
      }
      corpus.links.push_back(std::move(l));
    });
  }

  if (std::filesystem::exists(dir / "revmap.json")) {
    const auto j = json::parse(read_file(dir / "revmap.json"));
    for (const auto& [rev, hash] : j.items()) {
      const auto r = std::stoull(rev);
      const auto h = hash.get<std::string>();
      const auto [it, inserted] = corpus.revision_map.emplace(r, h);
      if (!inserted && it->second != h) {
        throw DataError("revmap.json: r" + rev + " claimed by " + it->second + " and " + h);
      }
    }
  }

  if (std::filesystem::exists(dir / "labels.csv")) {
    auto res = load_labels(read_file(dir / "labels.csv"), corpus);
    if (!res.unresolved.empty()) {
      throw DataError("labels.csv: unknown commit " + res.unresolved.front());
    }
  }
  return corpus;
}

}  // namespace cs
