#include "claimcheck/local_index.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "claimcheck/errors.hpp"
#include "claimcheck/text.hpp"

namespace claimcheck {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kDocumentsFile = "documents.jsonl";
constexpr const char* kPostingsFile = "postings.tsv";
constexpr const char* kFormatName = "claimcheck-bm25";
constexpr int kFormatVersion = 1;

void read_corpus_file(const fs::path& file, std::set<std::string>& seen, CorpusLoad& load) {
  std::ifstream in(file);
  if (!in) throw FileMissing("cannot open corpus file: " + file.string());
  std::string line;
  size_t line_no = 0;
  auto issue = [&](std::string message) {
    load.issues.push_back({file.string(), line_no, std::move(message)});
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      issue("not a JSON object");
      continue;
    }
    if (!record.contains("doc_id") || !record["doc_id"].is_string() ||
        record["doc_id"].get<std::string>().empty()) {
      issue("missing or empty string field 'doc_id'");
      continue;
    }
    if (!record.contains("body") || !record["body"].is_string()) {
      issue("missing string field 'body'");
      continue;
    }
    if (record.contains("title") && !record["title"].is_string()) {
      issue("field 'title' is not a string");
      continue;
    }
    CorpusDocument doc{record["doc_id"].get<std::string>(), record.value("title", std::string()),
                       record["body"].get<std::string>()};
    if (!seen.insert(doc.doc_id).second) {
      issue("duplicate doc_id '" + doc.doc_id + "'");
      continue;
    }
    load.documents.push_back(std::move(doc));
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IndexFormatError("missing index file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

CorpusLoad read_corpus(const fs::path& path) {
  if (!fs::exists(path)) throw FileMissing("corpus path does not exist: " + path.string());
  CorpusLoad load;
  std::set<std::string> seen;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) read_corpus_file(file, seen, load);
  } else {
    read_corpus_file(path, seen, load);
  }
  return load;
}

std::string indexed_text(const CorpusDocument& doc) {
  if (doc.title.empty()) return doc.body;
  return doc.title + "\n" + doc.body;
}

LocalIndex LocalIndex::from_documents(std::vector<CorpusDocument> documents, Bm25Params params) {
  if (documents.empty()) throw EmptyCorpus("corpus contains no documents");
  LocalIndex index;
  index.params_ = params;
  index.documents_ = std::move(documents);
  index.lengths_.reserve(index.documents_.size());

  for (uint32_t d = 0; d < index.documents_.size(); ++d) {
    const auto tokens = tokenize(indexed_text(index.documents_[d]));
    index.lengths_.push_back(static_cast<uint32_t>(tokens.size()));
    index.stats_.total_length += tokens.size();
    std::map<std::string, uint32_t> counts;
    for (const auto& token : tokens) ++counts[token];
    for (const auto& [term, tf] : counts) index.postings_[term].push_back({d, tf});
  }

  index.stats_.doc_count = index.documents_.size();
  index.stats_.avg_doc_length =
      static_cast<double>(index.stats_.total_length) / static_cast<double>(index.stats_.doc_count);
  for (const auto& [term, list] : index.postings_) index.stats_.doc_freq[term] = list.size();
  return index;
}

std::vector<ScoredDocument> LocalIndex::search(const std::string& query, size_t k) const {
  const auto terms = tokenize(query);
  return search_terms(terms, k);
}

std::vector<ScoredDocument> LocalIndex::search_terms(std::span<const std::string> query_terms, size_t k) const {
  if (k == 0) return {};
  std::vector<double> scores(documents_.size(), 0.0);
  std::vector<uint32_t> touched;
  for (const auto& term : distinct_terms(query_terms)) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double idf = bm25_idf(stats_.doc_count, it->second.size());
    for (const auto& posting : it->second) {
      if (scores[posting.doc] == 0.0) touched.push_back(posting.doc);
      scores[posting.doc] +=
          bm25_term_weight(idf, posting.tf, lengths_[posting.doc], stats_.avg_doc_length, params_);
    }
  }

  std::vector<ScoredDocument> ranked;
  ranked.reserve(touched.size());
  for (uint32_t doc : touched) {
    if (scores[doc] > 0.0) ranked.push_back({doc, scores[doc]});
  }
  auto better = [this](const ScoredDocument& a, const ScoredDocument& b) {
    if (a.score != b.score) return a.score > b.score;
    return documents_[a.doc_index].doc_id < documents_[b.doc_index].doc_id;
  };
  if (ranked.size() > k) {
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(), better);
    ranked.resize(k);
  } else {
    std::sort(ranked.begin(), ranked.end(), better);
  }
  return ranked;
}

void LocalIndex::save(const fs::path& dir) const {
  fs::create_directories(dir);

  {
    std::ofstream out(dir / kDocumentsFile, std::ios::binary | std::ios::trunc);
    for (size_t d = 0; d < documents_.size(); ++d) {
      json record = {{"doc_id", documents_[d].doc_id},
                     {"title", documents_[d].title},
                     {"body", documents_[d].body},
                     {"length", lengths_[d]}};
      out << record.dump() << '\n';
    }
    if (!out) throw IndexFormatError("failed writing " + (dir / kDocumentsFile).string());
  }
  {
    std::ofstream out(dir / kPostingsFile, std::ios::binary | std::ios::trunc);
    for (const auto& [term, list] : postings_) {
      out << term << '\t' << list.size() << '\t';
      for (size_t i = 0; i < list.size(); ++i) {
        if (i > 0) out << ' ';
        out << list[i].doc << ':' << list[i].tf;
      }
      out << '\n';
    }
    if (!out) throw IndexFormatError("failed writing " + (dir / kPostingsFile).string());
  }
  {
    json manifest = {{"format", kFormatName},
                     {"version", kFormatVersion},
                     {"doc_count", stats_.doc_count},
                     {"term_count", postings_.size()},
                     {"total_length", stats_.total_length},
                     {"avg_doc_length", stats_.avg_doc_length},
                     {"k1", params_.k1},
                     {"b", params_.b},
                     {"documents", kDocumentsFile},
                     {"postings", kPostingsFile}};
    std::ofstream out(dir / kManifestFile, std::ios::binary | std::ios::trunc);
    out << manifest.dump(2) << '\n';
    if (!out) throw IndexFormatError("failed writing " + (dir / kManifestFile).string());
  }
}

bool LocalIndex::is_index_dir(const fs::path& dir) {
  return fs::is_directory(dir) && fs::exists(dir / kManifestFile);
}

LocalIndex LocalIndex::load(const fs::path& dir) {
  json manifest = json::parse(read_file(dir / kManifestFile), nullptr, false);
  if (manifest.is_discarded() || manifest.value("format", "") != kFormatName) {
    throw IndexFormatError("not an index manifest: " + (dir / kManifestFile).string());
  }
  if (manifest.value("version", 0) != kFormatVersion) {
    throw IndexFormatError("unsupported index version in " + dir.string());
  }

  LocalIndex index;
  index.params_ = {manifest.value("k1", 1.2), manifest.value("b", 0.75)};

  std::istringstream docs(read_file(dir / kDocumentsFile));
  std::string line;
  while (std::getline(docs, line)) {
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) throw IndexFormatError("corrupt documents file in " + dir.string());
    index.documents_.push_back({record.at("doc_id").get<std::string>(), record.at("title").get<std::string>(),
                                record.at("body").get<std::string>()});
    index.lengths_.push_back(record.at("length").get<uint32_t>());
    index.stats_.total_length += index.lengths_.back();
  }

  std::istringstream postings(read_file(dir / kPostingsFile));
  while (std::getline(postings, line)) {
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) throw IndexFormatError("corrupt postings line in " + dir.string());
    const std::string term = line.substr(0, tab1);
    const size_t df = std::stoul(line.substr(tab1 + 1, tab2 - tab1 - 1));
    std::istringstream entries(line.substr(tab2 + 1));
    std::vector<Posting> list;
    std::string entry;
    while (entries >> entry) {
      const auto colon = entry.find(':');
      if (colon == std::string::npos) throw IndexFormatError("corrupt posting '" + entry + "'");
      Posting p{static_cast<uint32_t>(std::stoul(entry.substr(0, colon))),
                static_cast<uint32_t>(std::stoul(entry.substr(colon + 1)))};
      if (p.doc >= index.documents_.size()) throw IndexFormatError("posting refers to unknown document");
      list.push_back(p);
    }
    if (list.size() != df) throw IndexFormatError("posting count mismatch for term '" + term + "'");
    index.stats_.doc_freq[term] = df;
    index.postings_.emplace(term, std::move(list));
  }

  index.stats_.doc_count = index.documents_.size();
  if (index.stats_.doc_count == 0) throw IndexFormatError("index has no documents: " + dir.string());
  if (manifest.value("doc_count", size_t{0}) != index.stats_.doc_count ||
      manifest.value("term_count", size_t{0}) != index.postings_.size()) {
    throw IndexFormatError("manifest counts disagree with index files in " + dir.string());
  }
  index.stats_.avg_doc_length =
      static_cast<double>(index.stats_.total_length) / static_cast<double>(index.stats_.doc_count);
  return index;
}

IndexBuild build_local_index(const fs::path& corpus_path, Bm25Params params) {
  CorpusLoad load = read_corpus(corpus_path);
  if (load.documents.empty()) {
    throw EmptyCorpus("no valid documents in " + corpus_path.string() + " (" +
                      std::to_string(load.issues.size()) + " malformed lines)");
  }
  return {LocalIndex::from_documents(std::move(load.documents), params), std::move(load.issues)};
}

LocalIndex open_index(const fs::path& path) {
  if (LocalIndex::is_index_dir(path)) return LocalIndex::load(path);
  return build_local_index(path).index;
}

}  // namespace claimcheck
