#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "claimcheck/bm25.hpp"

namespace claimcheck {

/// One record of the JSONL document format: {"doc_id", "title", "body"}.
struct CorpusDocument {
  std::string doc_id;
  std::string title;
  std::string body;
};

struct CorpusIssue {
  std::string file;
  size_t line = 0;
  std::string message;
};

struct CorpusLoad {
  std::vector<CorpusDocument> documents;
  std::vector<CorpusIssue> issues;  // malformed lines, skipped
};

/// Reads a JSONL file, or every *.jsonl file of a directory in name order.
/// Malformed lines and duplicate doc_ids are reported and skipped. Throws
/// FileMissing when the path does not exist.
CorpusLoad read_corpus(const std::filesystem::path& path);

/// Text that gets tokenized for a document: title and body.
std::string indexed_text(const CorpusDocument& doc);

struct ScoredDocument {
  uint32_t doc_index = 0;
  double score = 0.0;
};

/// In-memory inverted index with BM25 statistics. Immutable after
/// construction, so concurrent searches are safe.
class LocalIndex {
 public:
  struct Posting {
    uint32_t doc = 0;
    uint32_t tf = 0;
    friend bool operator==(const Posting&, const Posting&) = default;
  };

  /// Throws EmptyCorpus when `documents` is empty.
  static LocalIndex from_documents(std::vector<CorpusDocument> documents, Bm25Params params = {});

  /// Writes manifest.json, documents.jsonl and postings.tsv into `dir`.
  /// Output bytes depend only on the index contents.
  void save(const std::filesystem::path& dir) const;
  /// Throws IndexFormatError on a missing or inconsistent index directory.
  static LocalIndex load(const std::filesystem::path& dir);
  static bool is_index_dir(const std::filesystem::path& dir);

  /// Documents with a positive score, best first; ties by ascending doc_id.
  std::vector<ScoredDocument> search(const std::string& query, size_t k) const;
  std::vector<ScoredDocument> search_terms(std::span<const std::string> query_terms, size_t k) const;

  const CorpusStats& stats() const { return stats_; }
  const Bm25Params& params() const { return params_; }
  const std::vector<CorpusDocument>& documents() const { return documents_; }
  const std::vector<uint32_t>& lengths() const { return lengths_; }
  size_t term_count() const { return postings_.size(); }
  const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }

 private:
  std::vector<CorpusDocument> documents_;
  std::vector<uint32_t> lengths_;
  std::map<std::string, std::vector<Posting>> postings_;
  CorpusStats stats_;
  Bm25Params params_;
};

struct IndexBuild {
  LocalIndex index;
  std::vector<CorpusIssue> issues;
};

/// read_corpus + from_documents. Throws EmptyCorpus when no valid document
/// remains.
IndexBuild build_local_index(const std::filesystem::path& corpus_path, Bm25Params params = {});

/// Loads a saved index directory, or builds in memory from a JSONL corpus.
LocalIndex open_index(const std::filesystem::path& path);

}  // namespace claimcheck
