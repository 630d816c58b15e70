#pragma once

// Canonical records for a project's change history and issue tracker, plus the
// parsers that produce them.
//
// Commit log text format (one entry):
//
//   \x01COMMIT\x01
//   <40-char hash>
//   <author name>
//   <author email>
//   <unix author timestamp>
//   <base64 of the full commit message>
//   <added>\t<removed>\t<path>        (zero or more numstat lines)
//
// Blank lines between entries and between numstat lines are ignored.

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "changescout/common.hpp"

namespace cs {

enum class FileStatus { kAdded, kModified, kDeleted, kRenamed, kBinary };

std::string_view to_string(FileStatus s);
FileStatus file_status_from_string(std::string_view s);

struct FileChange {
  std::string path;
  std::uint64_t lines_added = 0;
  std::uint64_t lines_removed = 0;
  FileStatus status = FileStatus::kModified;

  friend bool operator==(const FileChange&, const FileChange&) = default;
};

struct CommitRecord {
  std::string hash;
  std::string author_name;
  std::string author_email;
  std::int64_t timestamp = 0;  // author time, unix seconds
  std::string message;
  std::vector<FileChange> files;
  std::optional<std::uint64_t> svn_revision;

  friend bool operator==(const CommitRecord&, const CommitRecord&) = default;
};

struct IssueRecord {
  std::string key;
  std::int64_t created = 0;
  std::optional<std::int64_t> resolved;
  std::uint64_t comment_count = 0;
  std::optional<std::vector<std::string>> comment_bodies;

  friend bool operator==(const IssueRecord&, const IssueRecord&) = default;
};

enum class LinkSource { kMessageKey, kExplicitImport };

std::string_view to_string(LinkSource s);

struct IssueLink {
  std::string commit_hash;
  std::string issue_key;
  LinkSource source = LinkSource::kMessageKey;

  friend bool operator==(const IssueLink&, const IssueLink&) = default;
};

/// SVN revision -> git hash. Injective on revisions.
using RevisionMap = std::map<std::uint64_t, std::string>;

struct Corpus {
  std::vector<CommitRecord> commits;  // ascending (timestamp, hash)
  std::vector<IssueRecord> issues;
  std::vector<IssueLink> links;
  RevisionMap revision_map;
  std::map<std::string, Label> labels;

  /// Position of a commit in `commits`, or nullopt.
  std::optional<std::size_t> find_commit(std::string_view hash) const;
  /// Rebuilds the hash index. Call after mutating `commits`.
  void reindex();

 private:
  mutable std::map<std::string, std::size_t, std::less<>> index_;
};

/// Sorts commits ascending by timestamp, ties broken by hash.
void sort_commits(std::vector<CommitRecord>& commits);

bool is_commit_hash(std::string_view s);

// --- commit log ------------------------------------------------------------

inline constexpr std::string_view kCommitDelimiter = "\x01" "COMMIT" "\x01";

/// Parses the canonical commit log. Output is sorted by (timestamp, hash).
/// Throws ParseError with the byte offset of a malformed line. Messages with
/// invalid UTF-8 are repaired and reported to `diag`.
std::vector<CommitRecord> parse_git_log(std::string_view text, Diagnostics* diag = nullptr);
std::vector<CommitRecord> parse_git_log(std::istream& in, Diagnostics* diag = nullptr);

/// Writes commits in the canonical log format. Statuses other than binary and
/// renamed are not representable in numstat and read back as modified.
std::string serialize_git_log(const std::vector<CommitRecord>& commits);

/// Pretty format for `git log` that yields raw (not base64) messages framed by
/// \x02 ... \x03. convert_raw_git_log() turns that output into canonical records.
inline constexpr std::string_view kRawGitPrettyFormat =
    "%x01COMMIT%x01%n%H%n%an%n%ae%n%at%n%x02%B%x03";

std::vector<CommitRecord> convert_raw_git_log(std::string_view text, Diagnostics* diag = nullptr);

/// Runs `git log --numstat` in `repo` and converts its output.
std::vector<CommitRecord> read_git_repository(const std::string& repo, Diagnostics* diag = nullptr);

/// Parses one numstat line ("<added>\t<removed>\t<path>").
/// Rename forms "old => new" and "dir/{old => new}/f" resolve to the new path.
std::optional<FileChange> parse_numstat_line(std::string_view line);

// --- issues ----------------------------------------------------------------

struct RecordError {
  std::size_t line = 0;
  std::string message;
};

struct IssueParseResult {
  std::vector<IssueRecord> issues;  // input order
  std::vector<RecordError> errors;
};

/// Parses line-delimited JSON issues. Record-level problems are collected in
/// `errors`; a duplicate key throws DataError.
IssueParseResult parse_issue_archive(std::string_view text);
IssueParseResult parse_issue_archive(std::istream& in);

// --- linking ---------------------------------------------------------------

struct LinkResult {
  std::vector<IssueLink> links;
  std::size_t unmatched_mentions = 0;  // key-shaped mentions without an issue
};

/// Finds "<project_key>-<digits>" mentions in commit messages. One link per
/// (commit, issue) pair. Throws UsageError if the key is not [A-Z][A-Z0-9]+.
LinkResult link_commits_to_issues(const std::vector<CommitRecord>& commits,
                                  const std::vector<IssueRecord>& issues,
                                  std::string_view project_key);

bool is_valid_project_key(std::string_view key);

/// Maps revisions from "git-svn-id: <url>@<rev> <uuid>" trailers and explicit
/// svn_revision fields. Two commits claiming one revision throws DataError.
RevisionMap build_svn_revision_map(const std::vector<CommitRecord>& commits);

// --- labels ----------------------------------------------------------------

struct LabelLoadResult {
  std::size_t loaded = 0;
  std::vector<std::string> unresolved;  // hashes not in the corpus
};

/// Reads CSV "hash,label" with label in {0,1} and attaches labels to `corpus`.
LabelLoadResult load_labels(std::string_view text, Corpus& corpus);

/// Assembles a corpus: sorts commits, checks hash uniqueness, builds the
/// revision map and message links.
Corpus build_corpus(std::vector<CommitRecord> commits, std::vector<IssueRecord> issues,
                    std::string_view project_key, LinkResult* link_summary = nullptr);

// --- persistence -----------------------------------------------------------

/// Writes commits.jsonl, issues.jsonl, links.jsonl, revmap.json, labels.csv.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace cs
