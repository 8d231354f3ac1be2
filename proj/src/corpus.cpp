#include "bnbp/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "bnbp/distributions.hpp"

namespace bnbp {

std::int64_t Corpus::total_tokens() const {
  std::int64_t n = 0;
  for (const auto& d : docs) n += static_cast<std::int64_t>(d.size());
  return n;
}

void Corpus::validate() const {
  if (!vocab.empty() && static_cast<int>(vocab.size()) != num_terms) {
    throw std::invalid_argument("corpus: vocabulary has " + std::to_string(vocab.size()) +
                                " entries but V = " + std::to_string(num_terms));
  }
  for (std::size_t j = 0; j < docs.size(); ++j) {
    for (int v : docs[j]) {
      if (v < 0 || v >= num_terms) {
        throw std::invalid_argument("corpus: document " + std::to_string(j) + " has term index " +
                                    std::to_string(v) + " outside [0, " + std::to_string(num_terms) + ")");
      }
    }
  }
}

CorpusFormat parse_corpus_format(const std::string& name) {
  if (name == "uci") return CorpusFormat::kUci;
  if (name == "lines") return CorpusFormat::kLines;
  throw std::invalid_argument("unknown corpus format '" + name + "' (expected uci or lines)");
}

namespace {

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

long long read_header_value(std::istream& in, const char* name) {
  long long value;
  if (!(in >> value) || value < 0) {
    throw std::runtime_error(std::string("UCI docword: malformed header (") + name + ")");
  }
  return value;
}

}  // namespace

std::vector<std::string> read_vocab(std::istream& in) {
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    vocab.push_back(line);
  }
  return vocab;
}

Corpus read_uci(std::istream& in, std::vector<std::string> vocab) {
  const long long num_docs = read_header_value(in, "D");
  const long long num_terms = read_header_value(in, "W");
  const long long nnz = read_header_value(in, "NNZ");
  if (!vocab.empty() && static_cast<long long>(vocab.size()) != num_terms) {
    throw std::runtime_error("UCI vocabulary has " + std::to_string(vocab.size()) +
                             " terms but the docword header says W = " + std::to_string(num_terms));
  }
  Corpus corpus;
  corpus.num_terms = static_cast<int>(num_terms);
  corpus.vocab = std::move(vocab);
  corpus.docs.resize(static_cast<std::size_t>(num_docs));
  long long doc, term, count;
  long long seen = 0;
  while (in >> doc >> term >> count) {
    ++seen;
    if (doc < 1 || doc > num_docs) {
      throw std::runtime_error("UCI docword: triple " + std::to_string(seen) + " has docID " +
                               std::to_string(doc) + " outside [1, " + std::to_string(num_docs) + "]");
    }
    if (term < 1 || term > num_terms) {
      throw std::runtime_error("UCI docword: triple " + std::to_string(seen) + " has termID " +
                               std::to_string(term) + " outside [1, " + std::to_string(num_terms) + "]");
    }
    if (count < 0) {
      throw std::runtime_error("UCI docword: triple " + std::to_string(seen) + " has a negative count");
    }
    auto& d = corpus.docs[static_cast<std::size_t>(doc - 1)];
    d.insert(d.end(), static_cast<std::size_t>(count), static_cast<int>(term - 1));
  }
  if (!in.eof()) throw std::runtime_error("UCI docword: malformed triple after entry " + std::to_string(seen));
  if (seen != nnz) {
    throw std::runtime_error("UCI docword: header promises " + std::to_string(nnz) + " triples, found " +
                             std::to_string(seen));
  }
  if (corpus.total_tokens() == 0) throw std::runtime_error("UCI docword: empty corpus");
  return corpus;
}

Corpus read_lines(std::istream& in, std::vector<std::string> vocab) {
  const bool fixed_vocab = !vocab.empty();
  std::unordered_map<std::string, int> index;
  for (std::size_t v = 0; v < vocab.size(); ++v) {
    if (!index.emplace(vocab[v], static_cast<int>(v)).second) {
      throw std::runtime_error("vocabulary lists '" + vocab[v] + "' twice");
    }
  }
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    std::istringstream words(line);
    std::vector<int> doc;
    std::string word;
    while (words >> word) {
      auto it = index.find(word);
      if (it == index.end()) {
        if (fixed_vocab) {
          throw std::runtime_error("line " + std::to_string(line_no) + ": word '" + word +
                                   "' is not in the vocabulary");
        }
        it = index.emplace(word, static_cast<int>(vocab.size())).first;
        vocab.push_back(word);
      }
      doc.push_back(it->second);
    }
    corpus.docs.push_back(std::move(doc));
  }
  corpus.num_terms = static_cast<int>(vocab.size());
  corpus.vocab = std::move(vocab);
  if (corpus.total_tokens() == 0) throw std::runtime_error("lines corpus: empty corpus");
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const std::filesystem::path& vocab_path) {
  std::vector<std::string> vocab;
  if (!vocab_path.empty()) {
    auto vin = open_or_throw(vocab_path);
    vocab = read_vocab(vin);
  }
  auto in = open_or_throw(path);
  Corpus corpus = format == CorpusFormat::kUci ? read_uci(in, std::move(vocab)) : read_lines(in, std::move(vocab));
  corpus.validate();
  return corpus;
}

void write_uci(std::ostream& out, const Corpus& corpus) {
  std::vector<std::vector<std::pair<int, int>>> rows(corpus.docs.size());
  std::size_t nnz = 0;
  for (std::size_t j = 0; j < corpus.docs.size(); ++j) {
    std::unordered_map<int, std::size_t> slot;
    for (int v : corpus.docs[j]) {
      auto [it, fresh] = slot.emplace(v, rows[j].size());
      if (fresh) rows[j].emplace_back(v, 0);
      ++rows[j][it->second].second;
    }
    nnz += rows[j].size();
  }
  out << corpus.docs.size() << '\n' << corpus.num_terms << '\n' << nnz << '\n';
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (const auto& [v, n] : rows[j]) out << (j + 1) << ' ' << (v + 1) << ' ' << n << '\n';
  }
}

void write_lines(std::ostream& out, const Corpus& corpus) {
  if (static_cast<int>(corpus.vocab.size()) != corpus.num_terms) {
    throw std::invalid_argument("write_lines: corpus has no vocabulary");
  }
  for (const auto& doc : corpus.docs) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (i > 0) out << ' ';
      out << corpus.vocab[doc[i]];
    }
    out << '\n';
  }
}

void write_vocab(std::ostream& out, const Corpus& corpus) {
  for (const auto& term : corpus.vocab) out << term << '\n';
}

FilterResult filter_vocab(const Corpus& corpus, int min_docs) {
  if (min_docs < 1) throw std::invalid_argument("filter_vocab: min_docs must be at least 1");
  std::vector<int> doc_freq(static_cast<std::size_t>(corpus.num_terms), 0);
  std::vector<int> last_doc(static_cast<std::size_t>(corpus.num_terms), -1);
  for (std::size_t j = 0; j < corpus.docs.size(); ++j) {
    for (int v : corpus.docs[j]) {
      if (last_doc[v] != static_cast<int>(j)) {
        last_doc[v] = static_cast<int>(j);
        ++doc_freq[v];
      }
    }
  }
  std::vector<int> remap(static_cast<std::size_t>(corpus.num_terms), -1);
  FilterResult result;
  int kept = 0;
  for (int v = 0; v < corpus.num_terms; ++v) {
    if (doc_freq[v] >= min_docs) {
      remap[v] = kept++;
      if (!corpus.vocab.empty()) result.corpus.vocab.push_back(corpus.vocab[v]);
    }
  }
  if (kept == 0) {
    throw std::runtime_error("filter_vocab: no term occurs in " + std::to_string(min_docs) +
                             " or more documents");
  }
  result.corpus.num_terms = kept;
  result.dropped_terms = corpus.num_terms - kept;
  for (const auto& doc : corpus.docs) {
    std::vector<int> filtered;
    filtered.reserve(doc.size());
    for (int v : doc) {
      if (remap[v] >= 0) filtered.push_back(remap[v]);
    }
    if (filtered.empty()) {
      ++result.dropped_documents;
      continue;
    }
    result.corpus.docs.push_back(std::move(filtered));
  }
  return result;
}

std::int64_t TestCounts::total() const {
  std::int64_t n = 0;
  for (const auto& d : docs) {
    for (const auto& e : d) n += e.count;
  }
  return n;
}

HeldoutSplit split_heldout(const Corpus& corpus, double fraction, RngStream& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split_heldout: fraction must lie strictly between 0 and 1");
  }
  HeldoutSplit split;
  split.seed = rng.seed();
  split.train.num_terms = corpus.num_terms;
  split.train.vocab = corpus.vocab;
  split.test.num_terms = corpus.num_terms;
  split.train.docs.resize(corpus.docs.size());
  split.test.docs.resize(corpus.docs.size());
  std::vector<std::size_t> order;
  std::vector<char> keep;
  for (std::size_t j = 0; j < corpus.docs.size(); ++j) {
    const auto& doc = corpus.docs[j];
    const std::size_t m = doc.size();
    const auto n_train = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(m)));
    order.resize(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    // Partial Fisher-Yates: the first n_train slots become a uniform subset.
    for (std::size_t i = 0; i < n_train && i + 1 < m; ++i) {
      std::swap(order[i], order[i + rng.below(m - i)]);
    }
    keep.assign(m, 0);
    for (std::size_t i = 0; i < n_train; ++i) keep[order[i]] = 1;
    std::map<int, int> test;
    for (std::size_t i = 0; i < m; ++i) {
      if (keep[i]) {
        split.train.docs[j].push_back(doc[i]);
      } else {
        ++test[doc[i]];
      }
    }
    for (const auto& [v, n] : test) split.test.docs[j].push_back({v, n});
  }
  return split;
}

void write_test_counts(std::ostream& out, const TestCounts& test) {
  std::size_t nnz = 0;
  for (const auto& d : test.docs) nnz += d.size();
  out << test.docs.size() << '\n' << test.num_terms << '\n' << nnz << '\n';
  for (std::size_t j = 0; j < test.docs.size(); ++j) {
    for (const auto& e : test.docs[j]) out << (j + 1) << ' ' << (e.term + 1) << ' ' << e.count << '\n';
  }
}

TestCounts read_test_counts(std::istream& in) {
  // Leading "#" lines carry run metadata.
  while ((in >> std::ws).peek() == '#') in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  const long long num_docs = read_header_value(in, "D");
  const long long num_terms = read_header_value(in, "W");
  const long long nnz = read_header_value(in, "NNZ");
  TestCounts test;
  test.num_terms = static_cast<int>(num_terms);
  test.docs.resize(static_cast<std::size_t>(num_docs));
  long long doc, term, count;
  long long seen = 0;
  while (in >> doc >> term >> count) {
    ++seen;
    if (doc < 1 || doc > num_docs || term < 1 || term > num_terms || count < 0) {
      throw std::runtime_error("heldout counts: triple " + std::to_string(seen) + " is out of range");
    }
    if (count > 0) test.docs[doc - 1].push_back({static_cast<int>(term - 1), static_cast<int>(count)});
  }
  if (!in.eof() || seen != nnz) throw std::runtime_error("heldout counts: malformed body");
  for (auto& d : test.docs) {
    std::sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.term < b.term; });
  }
  return test;
}

Corpus synthetic_lda_corpus(const SyntheticCorpusOptions& options, RngStream& rng) {
  if (options.num_docs < 1 || options.num_terms < 1 || options.num_topics < 1) {
    throw std::invalid_argument("synthetic_lda_corpus: sizes must be positive");
  }
  const auto V = static_cast<std::size_t>(options.num_terms);
  const auto T = static_cast<std::size_t>(options.num_topics);

  // Per-topic cumulative term distributions.
  std::vector<std::vector<double>> topic_cdf(T);
  const std::vector<double> beta(V, options.topic_concentration);
  for (auto& cdf : topic_cdf) {
    cdf = sample_dirichlet(rng, beta);
    for (std::size_t v = 1; v < V; ++v) cdf[v] += cdf[v - 1];
  }
  auto draw = [&rng](const std::vector<double>& cdf) {
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
  };

  Corpus corpus;
  corpus.num_terms = options.num_terms;
  corpus.vocab.reserve(V);
  for (std::size_t v = 0; v < V; ++v) {
    std::ostringstream name;
    name << 'w' << v;
    corpus.vocab.push_back(name.str());
  }
  const std::vector<double> alpha(T, options.doc_concentration);
  corpus.docs.resize(static_cast<std::size_t>(options.num_docs));
  for (auto& doc : corpus.docs) {
    std::vector<double> theta = sample_dirichlet(rng, alpha);
    for (std::size_t t = 1; t < T; ++t) theta[t] += theta[t - 1];
    const auto length = std::max<std::uint64_t>(1, sample_poisson(rng, options.mean_doc_length));
    doc.reserve(length);
    for (std::uint64_t i = 0; i < length; ++i) {
      doc.push_back(static_cast<int>(draw(topic_cdf[draw(theta)])));
    }
  }
  return corpus;
}

}  // namespace bnbp
