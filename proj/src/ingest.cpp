#include "changescout/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <memory>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cs {

using nlohmann::json;

namespace {

struct Line {
  std::string_view text;
  std::size_t offset;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back({line, pos});
    pos = nl + 1;
  }
  return lines;
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool is_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Undoes git's C-style quoting of unusual paths ("a\tb", "\303\251").
std::string unquote_git_path(std::string_view p) {
  if (p.size() < 2 || p.front() != '"' || p.back() != '"') return std::string(p);
  p = p.substr(1, p.size() - 2);
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != '\\' || i + 1 == p.size()) {
      out += p[i];
      continue;
    }
    const char e = p[++i];
    switch (e) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case 'a': out += '\a'; break;
      case 'b': out += '\b'; break;
      case 'f': out += '\f'; break;
      case 'v': out += '\v'; break;
      default:
        if (e >= '0' && e <= '7' && i + 2 < p.size()) {
          const int v = (e - '0') * 64 + (p[i + 1] - '0') * 8 + (p[i + 2] - '0');
          out += static_cast<char>(v);
          i += 2;
        } else {
          out += e;
        }
    }
  }
  return out;
}

std::string resolve_rename(std::string_view p) {
  constexpr std::string_view kArrow = " => ";
  const auto arrow = p.find(kArrow);
  const auto open = p.rfind('{', arrow);
  const auto close = p.find('}', arrow);
  std::string out;
  if (open != std::string_view::npos && close != std::string_view::npos) {
    out = std::string(p.substr(0, open));
    out += p.substr(arrow + kArrow.size(), close - arrow - kArrow.size());
    out += p.substr(close + 1);
    std::string collapsed;
    for (char c : out) {
      if (c == '/' && !collapsed.empty() && collapsed.back() == '/') continue;
      collapsed += c;
    }
    if (!collapsed.empty() && collapsed.front() == '/') collapsed.erase(0, 1);
    return collapsed;
  }
  return std::string(p.substr(arrow + kArrow.size()));
}

void finish_message(CommitRecord& rec, Diagnostics* diag) {
  if (sanitize_utf8(rec.message)) {
    warn(diag, "commit " + rec.hash + ": invalid UTF-8 in message replaced with U+FFFD");
  }
}

void check_header(const CommitRecord& rec, const Line& hash_line, const Line& ts_line) {
  if (!is_commit_hash(rec.hash)) {
    throw ParseError("malformed commit hash '" + std::string(hash_line.text) + "'",
                     hash_line.offset);
  }
  if (rec.timestamp <= 0) {
    throw ParseError("timestamp must be a positive integer, got '" + std::string(ts_line.text) + "'",
                     ts_line.offset);
  }
}

}  // namespace

std::string_view to_string(FileStatus s) {
  switch (s) {
    case FileStatus::kAdded: return "added";
    case FileStatus::kModified: return "modified";
    case FileStatus::kDeleted: return "deleted";
    case FileStatus::kRenamed: return "renamed";
    case FileStatus::kBinary: return "binary";
  }
  return "modified";
}

FileStatus file_status_from_string(std::string_view s) {
  if (s == "added") return FileStatus::kAdded;
  if (s == "modified") return FileStatus::kModified;
  if (s == "deleted") return FileStatus::kDeleted;
  if (s == "renamed") return FileStatus::kRenamed;
  if (s == "binary") return FileStatus::kBinary;
  throw DataError("unknown file status '" + std::string(s) + "'");
}

std::string_view to_string(LinkSource s) {
  return s == LinkSource::kMessageKey ? "message-key" : "explicit-import";
}

std::optional<std::size_t> Corpus::find_commit(std::string_view hash) const {
  if (index_.size() != commits.size()) {
    index_.clear();
    for (std::size_t i = 0; i < commits.size(); ++i) index_.emplace(commits[i].hash, i);
  }
  const auto it = index_.find(hash);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Corpus::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < commits.size(); ++i) index_.emplace(commits[i].hash, i);
}

void sort_commits(std::vector<CommitRecord>& commits) {
  std::stable_sort(commits.begin(), commits.end(), [](const auto& a, const auto& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.hash < b.hash;
  });
}

bool is_commit_hash(std::string_view s) {
  return s.size() == 40 && std::all_of(s.begin(), s.end(), [](char c) {
           return is_digit(c) || (c >= 'a' && c <= 'f');
         });
}

std::optional<FileChange> parse_numstat_line(std::string_view line) {
  const auto t1 = line.find('\t');
  if (t1 == std::string_view::npos) return std::nullopt;
  const auto t2 = line.find('\t', t1 + 1);
  if (t2 == std::string_view::npos) return std::nullopt;
  const auto added = line.substr(0, t1);
  const auto removed = line.substr(t1 + 1, t2 - t1 - 1);
  std::string path = unquote_git_path(line.substr(t2 + 1));
  if (path.empty()) return std::nullopt;

  FileChange fc;
  if (path.find(" => ") != std::string::npos) {
    path = resolve_rename(path);
    fc.status = FileStatus::kRenamed;
  }
  fc.path = std::move(path);
  if (added == "-" && removed == "-") {
    fc.status = FileStatus::kBinary;
    return fc;
  }
  const auto a = parse_int<std::uint64_t>(added);
  const auto r = parse_int<std::uint64_t>(removed);
  if (!a || !r) return std::nullopt;
  fc.lines_added = *a;
  fc.lines_removed = *r;
  return fc;
}

std::vector<CommitRecord> parse_git_log(std::string_view text, Diagnostics* diag) {
  const auto lines = split_lines(text);
  std::vector<CommitRecord> out;
  std::size_t i = 0;
  const auto n = lines.size();
  while (i < n) {
    if (is_blank(lines[i].text)) {
      ++i;
      continue;
    }
    if (lines[i].text != kCommitDelimiter) {
      throw ParseError("expected commit delimiter", lines[i].offset);
    }
    const std::size_t start = lines[i].offset;
    ++i;
    if (i + 5 > n) throw ParseError("truncated commit header", start);
    for (std::size_t k = 0; k < 5; ++k) {
      if (lines[i + k].text == kCommitDelimiter) {
        throw ParseError("truncated commit header", lines[i + k].offset);
      }
    }
    CommitRecord rec;
    rec.hash = to_lower(lines[i].text);
    rec.author_name = std::string(lines[i + 1].text);
    rec.author_email = std::string(lines[i + 2].text);
    rec.timestamp = parse_int<std::int64_t>(lines[i + 3].text).value_or(0);
    check_header(rec, lines[i], lines[i + 3]);
    try {
      rec.message = base64_decode(lines[i + 4].text);
    } catch (const DataError& e) {
      throw ParseError(std::string("message: ") + e.what(), lines[i + 4].offset);
    }
    finish_message(rec, diag);
    i += 5;
    while (i < n && lines[i].text != kCommitDelimiter) {
      if (!is_blank(lines[i].text)) {
        auto fc = parse_numstat_line(lines[i].text);
        if (!fc) throw ParseError("malformed numstat line", lines[i].offset);
        rec.files.push_back(std::move(*fc));
      }
      ++i;
    }
    out.push_back(std::move(rec));
  }
  sort_commits(out);
  return out;
}

std::vector<CommitRecord> parse_git_log(std::istream& in, Diagnostics* diag) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_git_log(ss.str(), diag);
}

std::string serialize_git_log(const std::vector<CommitRecord>& commits) {
  std::string out;
  for (const auto& c : commits) {
    out += kCommitDelimiter;
    out += '\n';
    out += c.hash + '\n' + c.author_name + '\n' + c.author_email + '\n' +
           std::to_string(c.timestamp) + '\n' + base64_encode(c.message) + '\n';
    for (const auto& f : c.files) {
      if (f.status == FileStatus::kBinary) {
        out += "-\t-\t";
      } else {
        out += std::to_string(f.lines_added) + '\t' + std::to_string(f.lines_removed) + '\t';
      }
      if (f.status == FileStatus::kRenamed) out += " => ";
      out += f.path + '\n';
    }
  }
  return out;
}

std::vector<CommitRecord> convert_raw_git_log(std::string_view text, Diagnostics* diag) {
  std::vector<CommitRecord> out;
  std::size_t pos = 0;
  const auto next_line = [&](std::string_view what) -> Line {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) throw ParseError("truncated " + std::string(what), pos);
    Line l{text.substr(pos, nl - pos), pos};
    if (!l.text.empty() && l.text.back() == '\r') l.text.remove_suffix(1);
    pos = nl + 1;
    return l;
  };
  while (pos < text.size()) {
    const Line delim = next_line("commit");
    if (is_blank(delim.text)) continue;
    if (delim.text != kCommitDelimiter) throw ParseError("expected commit delimiter", delim.offset);
    const Line hash = next_line("header");
    const Line name = next_line("header");
    const Line email = next_line("header");
    const Line ts = next_line("header");
    CommitRecord rec;
    rec.hash = to_lower(hash.text);
    rec.author_name = std::string(name.text);
    rec.author_email = std::string(email.text);
    rec.timestamp = parse_int<std::int64_t>(ts.text).value_or(0);
    check_header(rec, hash, ts);
    if (pos >= text.size() || text[pos] != '\x02') throw ParseError("expected message start", pos);
    const auto end = text.find('\x03', pos);
    if (end == std::string_view::npos) throw ParseError("unterminated message", pos);
    rec.message = std::string(text.substr(pos + 1, end - pos - 1));
    while (!rec.message.empty() && rec.message.back() == '\n') rec.message.pop_back();
    finish_message(rec, diag);
    pos = end + 1;
    while (pos < text.size()) {
      const auto nl = text.find('\n', pos);
      const auto stop = nl == std::string_view::npos ? text.size() : nl;
      auto line = text.substr(pos, stop - pos);
      if (line == kCommitDelimiter) break;
      if (!is_blank(line)) {
        auto fc = parse_numstat_line(line);
        if (!fc) throw ParseError("malformed numstat line", pos);
        rec.files.push_back(std::move(*fc));
      }
      pos = stop == text.size() ? stop : stop + 1;
    }
    out.push_back(std::move(rec));
  }
  sort_commits(out);
  return out;
}

std::vector<CommitRecord> read_git_repository(const std::string& repo, Diagnostics* diag) {
  std::string quoted = "'";
  for (char c : repo) {
    if (c == '\'') quoted += "'\\''";
    else quoted += c;
  }
  quoted += "'";
  const std::string cmd = "git -C " + quoted + " log --numstat --format='" +
                          std::string(kRawGitPrettyFormat) + "'";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) throw DataError("cannot run git in " + repo);
  std::string output;
  char buf[1 << 16];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe.get())) > 0) output.append(buf, got);
  const int status = pclose(pipe.release());
  if (status != 0) throw DataError("git log failed in " + repo);
  return convert_raw_git_log(output, diag);
}

IssueParseResult parse_issue_archive(std::string_view text) {
  IssueParseResult result;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (is_blank(line.text)) continue;
    json j;
    try {
      j = json::parse(line.text);
    } catch (const json::parse_error& e) {
      result.errors.push_back({line_no, std::string("invalid JSON: ") + e.what()});
      continue;
    }
    try {
      if (!j.is_object()) throw DataError("record is not an object");
      if (!j.contains("key") || !j["key"].is_string() || j["key"].get<std::string>().empty()) {
        throw DataError("missing key field");
      }
      IssueRecord rec;
      rec.key = j["key"].get<std::string>();
      if (!j.contains("created") || !j["created"].is_number_integer()) {
        throw DataError(rec.key + ": missing or non-integer created");
      }
      rec.created = j["created"].get<std::int64_t>();
      if (j.contains("resolved") && !j["resolved"].is_null()) {
        if (!j["resolved"].is_number_integer()) throw DataError(rec.key + ": non-integer resolved");
        rec.resolved = j["resolved"].get<std::int64_t>();
        if (*rec.resolved < rec.created) throw DataError(rec.key + ": resolved before created");
      }
      if (j.contains("comments") && !j["comments"].is_null()) {
        if (!j["comments"].is_array()) throw DataError(rec.key + ": comments is not an array");
        std::vector<std::string> bodies;
        for (const auto& c : j["comments"]) {
          if (!c.is_string()) throw DataError(rec.key + ": comment body is not a string");
          bodies.push_back(c.get<std::string>());
        }
        rec.comment_bodies = std::move(bodies);
      }
      if (j.contains("comment_count") && !j["comment_count"].is_null()) {
        if (!j["comment_count"].is_number_unsigned()) {
          throw DataError(rec.key + ": comment_count must be a non-negative integer");
        }
        rec.comment_count = j["comment_count"].get<std::uint64_t>();
        if (rec.comment_bodies && rec.comment_bodies->size() != rec.comment_count) {
          throw DataError(rec.key + ": comment_count disagrees with comments");
        }
      } else if (rec.comment_bodies) {
        rec.comment_count = rec.comment_bodies->size();
      }
      if (!seen.insert(rec.key).second) {
        throw std::logic_error(rec.key);  // escalated below
      }
      result.issues.push_back(std::move(rec));
    } catch (const DataError& e) {
      result.errors.push_back({line_no, e.what()});
    } catch (const std::logic_error& e) {
      throw DataError("duplicate issue key " + std::string(e.what()) + " at line " +
                      std::to_string(line_no));
    }
  }
  return result;
}

IssueParseResult parse_issue_archive(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_issue_archive(ss.str());
}

bool is_valid_project_key(std::string_view key) {
  if (key.size() < 2 || !(key[0] >= 'A' && key[0] <= 'Z')) return false;
  return std::all_of(key.begin() + 1, key.end(),
                     [](char c) { return (c >= 'A' && c <= 'Z') || is_digit(c); });
}

LinkResult link_commits_to_issues(const std::vector<CommitRecord>& commits,
                                  const std::vector<IssueRecord>& issues,
                                  std::string_view project_key) {
  if (!is_valid_project_key(project_key)) {
    throw UsageError("project key must match [A-Z][A-Z0-9]+, got '" + std::string(project_key) + "'");
  }
  std::set<std::string, std::less<>> known;
  for (const auto& is : issues) known.insert(is.key);

  const std::string prefix = std::string(project_key) + "-";
  LinkResult result;
  for (const auto& c : commits) {
    std::set<std::string> linked;
    const std::string_view msg = c.message;
    for (auto at = msg.find(prefix); at != std::string_view::npos; at = msg.find(prefix, at + 1)) {
      if (at > 0 && is_alnum(msg[at - 1])) continue;
      auto end = at + prefix.size();
      while (end < msg.size() && is_digit(msg[end])) ++end;
      if (end == at + prefix.size()) continue;
      const auto key = msg.substr(at, end - at);
      if (!known.contains(key)) {
        ++result.unmatched_mentions;
        continue;
      }
      if (linked.emplace(key).second) {
        result.links.push_back({c.hash, std::string(key), LinkSource::kMessageKey});
      }
    }
  }
  return result;
}

RevisionMap build_svn_revision_map(const std::vector<CommitRecord>& commits) {
  RevisionMap map;
  const auto claim = [&](std::uint64_t rev, const std::string& hash) {
    const auto [it, inserted] = map.emplace(rev, hash);
    if (!inserted && it->second != hash) {
      throw DataError("svn revision r" + std::to_string(rev) + " claimed by " + it->second +
                      " and " + hash);
    }
  };
  constexpr std::string_view kTrailer = "git-svn-id:";
  for (const auto& c : commits) {
    if (c.svn_revision) claim(*c.svn_revision, c.hash);
    const std::string_view msg = c.message;
    for (auto at = msg.find(kTrailer); at != std::string_view::npos;
         at = msg.find(kTrailer, at + 1)) {
      auto p = at + kTrailer.size();
      while (p < msg.size() && (msg[p] == ' ' || msg[p] == '\t')) ++p;
      auto e = p;
      while (e < msg.size() && msg[e] != ' ' && msg[e] != '\t' && msg[e] != '\n' && msg[e] != '\r') {
        ++e;
      }
      const auto url_rev = msg.substr(p, e - p);
      const auto amp = url_rev.rfind('@');
      if (amp == std::string_view::npos || amp == 0) continue;
      const auto rev = parse_int<std::uint64_t>(url_rev.substr(amp + 1));
      if (!rev || *rev == 0) continue;
      claim(*rev, c.hash);
    }
  }
  return map;
}

LabelLoadResult load_labels(std::string_view text, Corpus& corpus) {
  LabelLoadResult result;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (is_blank(line.text)) continue;
    if (!header_seen) {
      const auto fields = csv_split(line.text);
      if (fields.size() != 2 || to_lower(trim(fields[0])) != "hash" ||
          to_lower(trim(fields[1])) != "label") {
        throw DataError("labels: expected header 'hash,label' at line " + std::to_string(line_no));
      }
      header_seen = true;
      continue;
    }
    const auto fields = csv_split(line.text);
    if (fields.size() != 2) {
      throw DataError("labels: expected 2 fields at line " + std::to_string(line_no));
    }
    const std::string hash = to_lower(trim(fields[0]));
    const std::string value = trim(fields[1]);
    Label label;
    if (value == "1") {
      label = Label::kInfluential;
    } else if (value == "0") {
      label = Label::kNonInfluential;
    } else {
      throw DataError("labels: label must be 0 or 1, got '" + value + "' at line " +
                      std::to_string(line_no));
    }
    if (!corpus.find_commit(hash)) {
      result.unresolved.push_back(hash);
      continue;
    }
    const auto [it, inserted] = corpus.labels.emplace(hash, label);
    if (!inserted && it->second != label) {
      throw DataError("labels: conflicting labels for " + hash + " at line " +
                      std::to_string(line_no));
    }
    if (inserted) ++result.loaded;
  }
  return result;
}

Corpus build_corpus(std::vector<CommitRecord> commits, std::vector<IssueRecord> issues,
                    std::string_view project_key, LinkResult* link_summary) {
  Corpus corpus;
  sort_commits(commits);
  std::set<std::string_view> hashes;
  for (const auto& c : commits) {
    if (!hashes.insert(c.hash).second) throw DataError("duplicate commit hash " + c.hash);
  }
  corpus.commits = std::move(commits);
  corpus.reindex();
  corpus.issues = std::move(issues);
  corpus.revision_map = build_svn_revision_map(corpus.commits);
  if (!project_key.empty()) {
    auto links = link_commits_to_issues(corpus.commits, corpus.issues, project_key);
    corpus.links = links.links;
    if (link_summary != nullptr) *link_summary = std::move(links);
  }
  return corpus;
}

}  // namespace cs
