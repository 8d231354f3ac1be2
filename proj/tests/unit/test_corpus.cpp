#include <doctest.h>

#include <filesystem>
#include <stdexcept>
#include <fstream>
#include <sstream>

#include "bnbp/corpus.hpp"
#include "bnbp/rng.hpp"

using namespace bnbp;

namespace {

Corpus parse_uci(const std::string& text) {
  std::istringstream in(text);
  return read_uci(in);
}

std::string err_of(const std::string& text) {
  try {
    parse_uci(text);
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

Corpus lines_corpus() {
  std::istringstream in("a b a c\nb b d\n\nc a e e e\n");
  return read_lines(in);
}

}  // namespace

TEST_CASE("UCI reader expands triples into tokens") {
  const Corpus one = parse_uci("1\n1\n1\n1 1 3\n");
  REQUIRE(one.num_docs() == 1);
  CHECK(one.docs[0] == std::vector<int>{0, 0, 0});
  CHECK(one.num_terms == 1);

  const Corpus c = parse_uci("3\n4\n4\n1 2 2\n1 4 1\n3 1 1\n3 3 2\n");
  CHECK(c.docs == std::vector<std::vector<int>>{{1, 1, 3}, {}, {0, 2, 2}});
  CHECK(c.total_tokens() == 6);
}

TEST_CASE("UCI reader reports malformed input") {
  CHECK(err_of("x\n1\n1\n1 1 1\n").find("malformed header") != std::string::npos);
  CHECK(err_of("2\n3\n1\n3 1 1\n").find("docID") != std::string::npos);
  CHECK(err_of("2\n3\n1\n1 4 1\n").find("termID") != std::string::npos);
  CHECK(err_of("2\n3\n2\n1 1 1\n").find("promises 2") != std::string::npos);
  CHECK(err_of("2\n3\n0\n").find("empty corpus") != std::string::npos);
  CHECK(err_of("2\n3\n1\n1 1 x\n").find("malformed triple") != std::string::npos);
  std::istringstream in("1\n2\n1\n1 1 1\n");
  CHECK_THROWS(read_uci(in, {"only-one"}));
}

TEST_CASE("UCI and lines formats round-trip") {
  const Corpus c = parse_uci("3\n5\n5\n1 2 2\n1 4 1\n2 5 3\n3 1 1\n3 3 2\n");
  std::ostringstream out;
  write_uci(out, c);
  CHECK(parse_uci(out.str()) == c);

  const Corpus l = lines_corpus();
  CHECK(l.num_docs() == 4);
  CHECK(l.vocab == std::vector<std::string>{"a", "b", "c", "d", "e"});
  CHECK(l.docs[0] == std::vector<int>{0, 1, 0, 2});
  CHECK(l.docs[2].empty());
  std::ostringstream text, vocab;
  write_lines(text, l);
  write_vocab(vocab, l);
  std::istringstream vin(vocab.str()), tin(text.str());
  CHECK(read_lines(tin, read_vocab(vin)) == l);

  std::istringstream bad("a z\n");
  CHECK_THROWS(read_lines(bad, {"a", "b"}));
}

TEST_CASE("load_corpus reads files in both formats") {
  const std::filesystem::path dir = std::filesystem::path(BNBP_TEST_TMPDIR) / "corpus";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "docword.txt") << "2\n3\n3\n1 1 2\n2 2 1\n2 3 1\n";
    std::ofstream(dir / "vocab.txt") << "x\ny\nz\n";
    std::ofstream(dir / "docs.txt") << "y z\nx\n";
  }
  const Corpus u = load_corpus(dir / "docword.txt", CorpusFormat::kUci, dir / "vocab.txt");
  CHECK(u.vocab == std::vector<std::string>{"x", "y", "z"});
  CHECK(u.docs == std::vector<std::vector<int>>{{0, 0}, {1, 2}});
  const Corpus l = load_corpus(dir / "docs.txt", CorpusFormat::kLines, dir / "vocab.txt");
  CHECK(l.docs == std::vector<std::vector<int>>{{1, 2}, {0}});
  CHECK_THROWS(load_corpus(dir / "missing.txt", CorpusFormat::kUci));
  CHECK(parse_corpus_format("uci") == CorpusFormat::kUci);
  CHECK(parse_corpus_format("lines") == CorpusFormat::kLines);
  CHECK_THROWS(parse_corpus_format("csv"));
}

TEST_CASE("vocabulary filter") {
  const Corpus c = lines_corpus();
  Corpus full = c;
  full.docs.erase(full.docs.begin() + 2);
  const FilterResult same = filter_vocab(full, 1);
  CHECK(same.corpus == full);
  CHECK(same.dropped_documents == 0);
  CHECK(filter_vocab(c, 1).dropped_documents == 1);

  // a, b, c occur in two documents; d and e in one (e five times in one).
  const FilterResult f = filter_vocab(c, 2);
  CHECK(f.corpus.vocab == std::vector<std::string>{"a", "b", "c"});
  CHECK(f.corpus.num_terms == 3);
  CHECK(f.dropped_terms == 2);
  CHECK(f.dropped_documents == 1);  // the empty line
  CHECK(f.corpus.docs == std::vector<std::vector<int>>{{0, 1, 0, 2}, {1, 1}, {2, 0}});
  CHECK_THROWS(filter_vocab(c, 4));
  CHECK_THROWS(filter_vocab(c, 0));

  // Term A (index 0) appears in one of three documents.
  Corpus three;
  three.num_terms = 3;
  three.docs = {{0, 1, 2}, {1, 2}, {2, 1, 1}};
  const FilterResult g = filter_vocab(three, 2);
  CHECK(g.corpus.num_terms == 2);
  CHECK(g.corpus.docs == std::vector<std::vector<int>>{{0, 1}, {0, 1}, {1, 0, 0}});
}

TEST_CASE("heldout split") {
  Corpus c;
  c.num_terms = 3;
  c.docs = {{0, 1, 2, 0, 1, 2, 0}, {1}, {2, 2}, {}};
  RngStream rng(61);
  const HeldoutSplit s = split_heldout(c, 0.5, rng);
  CHECK(s.train.docs[0].size() == 4);
  CHECK(s.test.docs[0].size() <= 3);
  CHECK(s.train.docs[1].size() == 1);
  CHECK(s.train.docs[2].size() == 1);
  CHECK(s.train.docs[3].empty());
  for (std::size_t j = 0; j < c.num_docs(); ++j) {
    std::vector<int> counts(3, 0);
    for (int v : s.train.docs[j]) ++counts[v];
    for (const auto& e : s.test.docs[j]) counts[e.term] += e.count;
    std::vector<int> want(3, 0);
    for (int v : c.docs[j]) ++want[v];
    CHECK(counts == want);
  }
  CHECK(s.test.total() == 3 + 0 + 1);

  RngStream a(62), b(62);
  const HeldoutSplit sa = split_heldout(c, 0.5, a), sb = split_heldout(c, 0.5, b);
  CHECK(sa.train == sb.train);
  CHECK(sa.test == sb.test);
  CHECK_THROWS(split_heldout(c, 1.0, a));

  std::ostringstream out;
  out << "# a comment line\n";
  write_test_counts(out, s.test);
  std::istringstream in(out.str());
  CHECK(read_test_counts(in) == s.test);
}

TEST_CASE("synthetic corpus") {
  RngStream a(63), b(63);
  SyntheticCorpusOptions opt;
  opt.num_docs = 40;
  opt.num_terms = 100;
  const Corpus x = synthetic_lda_corpus(opt, a);
  CHECK(x == synthetic_lda_corpus(opt, b));
  CHECK(x.num_docs() == 40);
  CHECK_NOTHROW(x.validate());
  CHECK(x.total_tokens() > 40 * 100);
}
