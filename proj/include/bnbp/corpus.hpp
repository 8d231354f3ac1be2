#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bnbp/rng.hpp"

namespace bnbp {

// Token-level grouped data: document j is a sequence of term indices in
// [0, V). The vocabulary may be empty when term strings are unknown; V is
// then carried by num_terms.
struct Corpus {
  std::vector<std::vector<int>> docs;
  std::vector<std::string> vocab;
  int num_terms = 0;

  std::size_t num_docs() const { return docs.size(); }
  std::int64_t total_tokens() const;
  // Throws std::invalid_argument on out-of-range indices or a vocabulary
  // whose size disagrees with num_terms.
  void validate() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

enum class CorpusFormat {
  kUci,    // docword file: D, W, NNZ header lines then "docID termID count"
  kLines,  // one whitespace-tokenized document per line
};

CorpusFormat parse_corpus_format(const std::string& name);

// Loads a corpus. For kUci, `vocab_path` (optional) lists W terms, one per
// line. For kLines, documents are lines of words; if `vocab_path` is given it
// fixes the term order and any other word is an error, otherwise terms are
// indexed in order of first appearance.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const std::filesystem::path& vocab_path = {});

Corpus read_uci(std::istream& docword, std::vector<std::string> vocab = {});
Corpus read_lines(std::istream& lines, std::vector<std::string> vocab = {});
std::vector<std::string> read_vocab(std::istream& in);

// UCI docword output. Within a document, terms appear in order of first
// occurrence, so loading the output reproduces any corpus whose documents
// list equal terms contiguously.
void write_uci(std::ostream& out, const Corpus& corpus);
// One line per document; requires a vocabulary.
void write_lines(std::ostream& out, const Corpus& corpus);
void write_vocab(std::ostream& out, const Corpus& corpus);

struct FilterResult {
  Corpus corpus;
  std::size_t dropped_documents = 0;
  int dropped_terms = 0;
};

// Keeps terms that occur in at least `min_docs` distinct documents,
// re-indexes them densely in their original order and drops documents left
// empty.
FilterResult filter_vocab(const Corpus& corpus, int min_docs);

// Per-document sparse test counts m^test_{vj}.
struct TestCounts {
  struct Entry {
    int term;
    int count;
    friend bool operator==(const Entry&, const Entry&) = default;
  };
  int num_terms = 0;
  std::vector<std::vector<Entry>> docs;  // entries sorted by term

  std::int64_t total() const;
  friend bool operator==(const TestCounts&, const TestCounts&) = default;
};

struct HeldoutSplit {
  Corpus train;
  TestCounts test;
  std::uint64_t seed = 0;
};

// Per document, a uniformly random ceil(fraction * m_j) tokens are kept for
// training (in their original order); the rest become test counts.
HeldoutSplit split_heldout(const Corpus& corpus, double fraction, RngStream& rng);

// Test counts as a UCI docword stream, and back.
void write_test_counts(std::ostream& out, const TestCounts& test);
TestCounts read_test_counts(std::istream& in);

// Corpus generated from an LDA model with `num_topics` topics drawn from
// Dir(topic_concentration) over `num_terms` terms, document proportions from
// Dir(doc_concentration) and Poisson(mean_doc_length) document lengths.
struct SyntheticCorpusOptions {
  int num_docs = 550;
  int num_terms = 1600;
  int num_topics = 25;
  double mean_doc_length = 130.0;
  double topic_concentration = 0.05;
  double doc_concentration = 0.2;
};

Corpus synthetic_lda_corpus(const SyntheticCorpusOptions& options, RngStream& rng);

}  // namespace bnbp
