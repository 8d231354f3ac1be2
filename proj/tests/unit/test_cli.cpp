#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bnbp/cli.hpp"

namespace fs = std::filesystem;
using bnbp::cli::RunConfig;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(BNBP_TEST_TMPDIR) / "cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig parse(std::vector<std::string> args) {
  args.insert(args.begin(), "bnbp");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  RunConfig config;
  std::ostringstream out;
  bnbp::cli::parse_args(static_cast<int>(argv.size()), argv.data(), config, out);
  return config;
}

int run(const RunConfig& config, std::string* err = nullptr) {
  std::ostringstream log, e;
  const int status = bnbp::cli::run(config, log, e);
  if (err) *err = e.str();
  return status;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Non-comment lines of a CSV artifact.
std::vector<std::string> body(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  }
  return lines;
}

fs::path write_toy_corpus(const fs::path& dir) {
  const fs::path p = dir / "toy.txt";
  std::ofstream(p) << "apple banana apple cherry banana apple date\n"
                      "banana cherry cherry date apple egg\n"
                      "egg fig fig grape egg fig apple\n"
                      "grape fig egg egg banana grape\n"
                      "apple apple banana cherry date egg fig grape\n";
  return p;
}

}  // namespace

TEST_CASE("flags override the config file") {
  const fs::path dir = scratch("config");
  std::ofstream(dir / "run.ini") << "iters=300\neta=0.25\nseed=9\nmodel=lda\n";
  const RunConfig c = parse({"train-bnbp", "--config", (dir / "run.ini").string(), "--eta", "0.1"});
  CHECK(c.command == "train-bnbp");
  CHECK(c.iters == 300);
  CHECK(c.seed == 9);
  CHECK(c.eta == 0.1);
  CHECK(c.min_doc_freq == 5);
  CHECK(c.split == 0.5);
  const RunConfig g = parse({"sweep-eta", "--etas", "0.5,0.05"});
  CHECK(g.etas == std::vector<double>{0.5, 0.05});
  CHECK_THROWS(parse({"train-bnbp", "--no-such-flag"}));
  CHECK_THROWS(parse({"train-bnbp", "--iters", "10", "--burnin", "3", "--collect", "3"}));
  CHECK_NOTHROW(parse({"train-bnbp", "--iters", "10", "--burnin", "3", "--collect", "7"}));
}

TEST_CASE("invalid configurations fail with a message") {
  RunConfig c;
  c.command = "frobnicate";
  std::string err;
  CHECK(run(c, &err) != 0);
  CHECK(err.find("unknown command") != std::string::npos);

  c.command = "train-bnbp";
  c.out = scratch("invalid").string();
  c.corpus = (fs::path(c.out) / "missing.txt").string();
  CHECK(run(c, &err) != 0);
  CHECK(!err.empty());
  CHECK(fs::is_empty(c.out));

  c.corpus = "x";
  c.eta = -1.0;
  CHECK(run(c) != 0);
  c.eta = 0.1;
  c.command = "sweep-eta";
  c.etas = {0.1, 0.0};
  CHECK(run(c, &err) != 0);
  CHECK(err.find("grid") != std::string::npos);
}

TEST_CASE("simulate-partition writes a 10 x K matrix whose rows sum to 50") {
  RunConfig c;
  c.command = "simulate-partition";
  c.iters = 100;
  c.out = scratch("sim").string();
  REQUIRE(run(c) == 0);
  const auto rows = body(fs::path(c.out) / "partition.csv");
  REQUIRE(rows.size() == 10);
  for (const auto& row : rows) {
    int sum = 0;
    std::istringstream cells(row);
    for (std::string cell; std::getline(cells, cell, ',');) sum += std::stoi(cell);
    CHECK(sum == 50);
  }
  const std::string text = slurp(fs::path(c.out) / "partition.csv");
  CHECK(text.rfind("# command=simulate-partition\n# seed=1\n", 0) == 0);
  CHECK(body(fs::path(c.out) / "trace.csv").size() == 102);
}

TEST_CASE("prior-matrix draws") {
  RunConfig c;
  c.command = "prior-matrix";
  c.draws = 50;
  c.out = scratch("prior").string();
  REQUIRE(run(c) == 0);
  const auto ks = body(fs::path(c.out) / "prior_k.csv");
  CHECK(ks.size() == 51);
  CHECK(ks.front() == "draw,K_J,m_dot");
  CHECK(body(fs::path(c.out) / "prior_matrices.csv").front() == "draw,group,cluster,count");
}

TEST_CASE("train then evaluate on a toy corpus, deterministically") {
  const fs::path dir = scratch("train");
  RunConfig c;
  c.command = "train-bnbp";
  c.corpus = write_toy_corpus(dir).string();
  c.format = "lines";
  c.min_doc_freq = 1;
  c.iters = 60;
  c.collect = 30;
  c.out = (dir / "a").string();
  REQUIRE(run(c) == 0);
  c.out = (dir / "b").string();
  REQUIRE(run(c) == 0);
  for (const char* f : {"trace.csv", "summary.csv", "checkpoint.txt", "heldout.txt"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    CHECK(slurp(dir / "a" / f).find("# seed=1") != std::string::npos);
  }

  RunConfig e;
  e.command = "eval-perplexity";
  e.checkpoint = (dir / "a" / "checkpoint.txt").string();
  e.heldout = (dir / "a" / "heldout.txt").string();
  e.collect = 20;
  e.out = (dir / "eval").string();
  REQUIRE(run(e) == 0);
  const auto rows = body(dir / "eval" / "perplexity.csv");
  REQUIRE(rows.size() == 2);
  const double ppl = std::stod(rows[1].substr(rows[1].rfind(',') + 1));
  CHECK(std::isfinite(ppl));
  CHECK(ppl >= 1.0);

  c.command = "train-lda";
  c.topics = 3;
  c.out = (dir / "lda").string();
  REQUIRE(run(c) == 0);
  e.checkpoint = (dir / "lda" / "checkpoint.txt").string();
  e.out = (dir / "eval-lda").string();
  REQUIRE(run(e) == 0);
}

TEST_CASE("sweep-eta output does not depend on the number of jobs") {
  const fs::path dir = scratch("sweep");
  RunConfig c;
  c.command = "sweep-eta";
  c.corpus = write_toy_corpus(dir).string();
  c.format = "lines";
  c.min_doc_freq = 1;
  c.iters = 20;
  c.collect = 10;
  c.etas = {0.5, 0.05, 0.1};
  c.out = (dir / "serial").string();
  REQUIRE(run(c) == 0);
  c.jobs = 3;
  c.out = (dir / "parallel").string();
  REQUIRE(run(c) == 0);
  const auto serial = body(dir / "serial" / "sweep.csv");
  CHECK(serial.size() == 4);
  CHECK(serial == body(dir / "parallel" / "sweep.csv"));
  CHECK(slurp(dir / "serial" / "trace_eta_0.05.csv") == slurp(dir / "parallel" / "trace_eta_0.05.csv"));
}
