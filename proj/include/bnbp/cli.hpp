#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bnbp::cli {

// Everything a command needs. Field defaults are the command-line defaults.
struct RunConfig {
  std::string command;

  // Corpus pipeline.
  std::string corpus;
  std::string format = "uci";
  std::string vocab;
  int min_doc_freq = 5;
  double split = 0.5;

  // Models.
  std::string model = "bnbp";
  double eta = 0.05;
  std::vector<double> etas = {0.005, 0.01, 0.02, 0.05, 0.1, 0.25, 0.5};
  double alpha = 1.0;
  int topics = 50;

  // Chain schedule. burnin < 0 means iters - collect.
  int iters = 2500;
  int burnin = -1;
  int collect = 1500;
  int thin = 1;

  std::uint64_t seed = 1;
  std::string out = ".";
  int jobs = 1;

  // Partition simulation and prior draws. gamma0 <= 0 means
  // expected_clusters / (psi(c + sum r) - psi(c)).
  int groups = 10;
  int group_size = 50;
  double c = 2.0;
  double gamma0 = 0.0;
  double expected_clusters = 12.0;
  double r = 1.0;
  int draws = 1000;

  // eval-perplexity inputs.
  std::string checkpoint;
  std::string heldout;

  // Throws std::invalid_argument describing the first problem found.
  void validate() const;
  int effective_burnin() const;
  // "# key=value" lines recorded at the top of every artifact.
  std::string header() const;
};

// Parses argv (CLI11; an optional --config key=value file is overridden by
// flags). Throws std::invalid_argument on bad usage; returns false when only
// help was requested.
bool parse_args(int argc, char** argv, RunConfig& config, std::ostream& out);

// Runs one command. Artifacts are staged and only published when the whole
// command succeeds. Returns the process exit status.
int run(const RunConfig& config, std::ostream& log, std::ostream& err);

int main(int argc, char** argv);

}  // namespace bnbp::cli
