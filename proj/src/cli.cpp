#include "bnbp/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bnbp/checkpoint.hpp"
#include "bnbp/corpus.hpp"
#include "bnbp/diagnostics.hpp"
#include "bnbp/distributions.hpp"
#include "bnbp/lda.hpp"
#include "bnbp/partition.hpp"
#include "bnbp/perplexity.hpp"
#include "bnbp/special.hpp"
#include "bnbp/topic_model.hpp"

namespace bnbp::cli {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kCommands = {"simulate-partition", "prior-matrix", "train-bnbp",
                                         "train-lda", "eval-perplexity", "sweep-eta"};

std::string real(double x) {
  std::ostringstream s;
  s.precision(10);
  s << x;
  return s.str();
}

// Output files are written as <name>.partial and renamed only by commit(),
// so a failed command leaves no unflagged artifacts behind.
class ArtifactSet {
 public:
  ArtifactSet(fs::path dir, std::string header) : dir_(std::move(dir)), header_(std::move(header)) {
    fs::create_directories(dir_);
  }
  ArtifactSet(const ArtifactSet&) = delete;
  ArtifactSet& operator=(const ArtifactSet&) = delete;

  ~ArtifactSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& [name, stream] : files_) fs::remove(partial(name), ec);
  }

  // With `commented`, the config header is written first.
  std::ostream& open(const std::string& name, bool commented = true) {
    auto stream = std::make_unique<std::ofstream>(partial(name), std::ios::binary);
    if (!*stream) throw std::runtime_error("cannot write " + partial(name).string());
    if (commented) *stream << header_;
    files_.emplace_back(name, std::move(stream));
    return *files_.back().second;
  }

  void commit() {
    for (auto& [name, stream] : files_) {
      stream->close();
      if (!*stream) throw std::runtime_error("error writing " + (dir_ / name).string());
    }
    for (const auto& [name, stream] : files_) fs::rename(partial(name), dir_ / name);
    committed_ = true;
  }

 private:
  fs::path partial(const std::string& name) const { return dir_ / (name + ".partial"); }

  fs::path dir_;
  std::string header_;
  std::vector<std::pair<std::string, std::unique_ptr<std::ofstream>>> files_;
  bool committed_ = false;
};

BnbpParams partition_params(const RunConfig& config) {
  BnbpParams params{config.gamma0, config.c, std::vector<double>(static_cast<std::size_t>(config.groups), config.r)};
  if (config.gamma0 <= 0.0) {
    const double r_dot = params.r_dot();
    params.gamma0 = config.expected_clusters / (digamma(config.c + r_dot) - digamma(config.c));
  }
  params.validate();
  return params;
}

struct PreparedCorpus {
  HeldoutSplit split;
  std::size_t dropped_documents = 0;
};

PreparedCorpus prepare_corpus(const RunConfig& config, std::ostream& log) {
  Corpus raw = load_corpus(config.corpus, parse_corpus_format(config.format), config.vocab);
  FilterResult filtered = filter_vocab(raw, config.min_doc_freq);
  RngStream split_rng = RngStream(config.seed).split("heldout-split");
  PreparedCorpus prepared{split_heldout(filtered.corpus, config.split, split_rng), filtered.dropped_documents};
  log << "corpus: " << raw.num_docs() << " documents, V=" << raw.num_terms << ", " << raw.total_tokens()
      << " tokens; after filtering (min " << config.min_doc_freq << " docs): " << filtered.corpus.num_docs()
      << " documents (" << filtered.dropped_documents << " dropped), V=" << filtered.corpus.num_terms << ", "
      << filtered.corpus.total_tokens() << " tokens\n";
  return prepared;
}

struct ChainOutcome {
  ChainTrace trace;
  TraceSummary summary;
  double perplexity = 0.0;
  int draws = 0;
  std::optional<TopicModelState> bnbp;
  std::optional<LdaState> lda;
  std::string rng_state;
};

ChainOutcome run_chain(const RunConfig& config, const std::string& model, double eta, const HeldoutSplit& split,
                       RngStream rng) {
  PerplexityAccumulator acc(split.test);
  auto sink = [&acc](int, const PosteriorDraw& draw) { acc.add(draw); };
  ChainOutcome outcome;
  const int collect = config.iters - config.effective_burnin();
  if (model == "bnbp") {
    BnbpTrainConfig tc;
    tc.eta = eta;
    tc.iterations = config.iters;
    tc.collect = collect;
    tc.thin = config.thin;
    auto result = train(split.train, tc, rng, sink);
    outcome.trace = std::move(result.trace);
    outcome.draws = result.draws_collected;
    outcome.bnbp.emplace(std::move(result.state));
  } else {
    LdaTrainConfig tc;
    tc.num_topics = config.topics;
    tc.alpha = config.alpha;
    tc.eta = eta;
    tc.iterations = config.iters;
    tc.collect = collect;
    tc.thin = config.thin;
    auto result = lda_train(split.train, tc, rng, sink);
    outcome.trace = std::move(result.trace);
    outcome.draws = result.draws_collected;
    outcome.lda.emplace(std::move(result.state));
  }
  outcome.rng_state = rng.save_state();
  if (config.iters > 0) outcome.summary = trace_diagnostics(outcome.trace, collect);
  outcome.perplexity = acc.num_draws() > 0 ? acc.value() : std::numeric_limits<double>::quiet_NaN();
  return outcome;
}

void write_summary_row(std::ostream& out, const std::string& model, double eta, const ChainOutcome& o) {
  out << model << ',' << real(eta) << ',' << o.summary.iterations << ',' << o.draws << ','
      << real(o.summary.mean_topics) << ',' << o.summary.stabilization_iter << ',' << real(o.perplexity) << '\n';
}

constexpr const char* kSummaryHeader = "model,eta,iterations,draws,mean_K,stabilization_iter,perplexity\n";

// ---------------------------------------------------------------------------

void simulate_partition(const RunConfig& config, ArtifactSet& artifacts, std::ostream& log) {
  const BnbpParams params = partition_params(config);
  RngStream rng(config.seed);
  const std::vector<int> sizes(static_cast<std::size_t>(config.groups), config.group_size);
  const PartitionRun run = partition_gibbs_run(sizes, params, config.iters, rng);
  const CountMatrix counts = run.partition.count_matrix();
  auto& matrix = artifacts.open("partition.csv");
  matrix << "# gamma0(resolved)=" << real(params.gamma0) << '\n';
  write_count_matrix_csv(matrix, counts);
  write_trace_csv(artifacts.open("trace.csv"), run.trace);
  log << "simulate-partition: K_J=" << counts.cols() << " after " << config.iters << " iterations\n";
}

void prior_matrix(const RunConfig& config, ArtifactSet& artifacts, std::ostream& log) {
  const BnbpParams params = partition_params(config);
  RngStream rng(config.seed);
  auto& ks = artifacts.open("prior_k.csv");
  auto& cells = artifacts.open("prior_matrices.csv");
  ks << "draw,K_J,m_dot\n";
  cells << "draw,group,cluster,count\n";
  double mean_k = 0.0;
  for (int d = 0; d < config.draws; ++d) {
    const CountMatrix m = count_matrix_prior_sample(static_cast<std::size_t>(config.groups), params, rng);
    long long total = 0;
    for (std::size_t j = 0; j < m.rows(); ++j) {
      for (std::size_t k = 0; k < m.cols(); ++k) {
        total += m(j, k);
        if (m(j, k) > 0) cells << d << ',' << j << ',' << k << ',' << m(j, k) << '\n';
      }
    }
    ks << d << ',' << m.cols() << ',' << total << '\n';
    mean_k += static_cast<double>(m.cols());
  }
  log << "prior-matrix: mean K_J=" << mean_k / config.draws << " over " << config.draws << " draws\n";
}

void train_model(const RunConfig& config, const std::string& model, ArtifactSet& artifacts, std::ostream& log) {
  const PreparedCorpus prepared = prepare_corpus(config, log);
  const RngStream rng = RngStream(config.seed).split("chain");
  ChainOutcome outcome = run_chain(config, model, config.eta, prepared.split, rng);

  write_trace_csv(artifacts.open("trace.csv"), outcome.trace);
  auto& summary = artifacts.open("summary.csv");
  summary << kSummaryHeader;
  write_summary_row(summary, model, config.eta, outcome);
  write_test_counts(artifacts.open("heldout.txt"), prepared.split.test);

  // The checkpoint magic line has to stay first; the config follows it.
  std::ostringstream ck;
  const CheckpointMeta meta{config.iters, config.seed, outcome.rng_state};
  if (outcome.bnbp) {
    write_checkpoint(ck, *outcome.bnbp, meta);
  } else {
    write_checkpoint(ck, *outcome.lda, meta);
  }
  const std::string text = ck.str();
  const std::size_t eol = text.find('\n') + 1;
  artifacts.open("checkpoint.txt", false) << text.substr(0, eol) << config.header() << text.substr(eol);
  log << model << ": mean K_J=" << outcome.summary.mean_topics << ", perplexity=" << outcome.perplexity << '\n';
}

void eval_perplexity(const RunConfig& config, ArtifactSet& artifacts, std::ostream& log) {
  std::ifstream ck_in(config.checkpoint);
  if (!ck_in) throw std::runtime_error("cannot open checkpoint " + config.checkpoint);
  LoadedCheckpoint ck = read_checkpoint(ck_in);
  std::ifstream test_in(config.heldout);
  if (!test_in) throw std::runtime_error("cannot open heldout counts " + config.heldout);
  const TestCounts test = read_test_counts(test_in);
  PerplexityAccumulator acc(test);
  RngStream rng = RngStream(config.seed).split("eval-perplexity");
  for (int s = 0; s < config.collect; ++s) {
    if (ck.bnbp) {
      draw_topic_weights(*ck.bnbp, rng);
      acc.add(posterior_point_draw(*ck.bnbp, rng));
    } else {
      acc.add(lda_posterior_draw(*ck.lda, rng));
    }
  }
  const int topics = ck.bnbp ? ck.bnbp->num_topics() : ck.lda->num_topics();
  auto& out = artifacts.open("perplexity.csv");
  out << "model,K_J,draws,perplexity\n";
  out << ck.model << ',' << topics << ',' << config.collect << ',' << real(acc.value()) << '\n';
  log << "eval-perplexity: " << acc.value() << " from " << config.collect << " draws\n";
}

void sweep_eta(const RunConfig& config, ArtifactSet& artifacts, std::ostream& log) {
  const PreparedCorpus prepared = prepare_corpus(config, log);
  const RngStream base = RngStream(config.seed).split("chain");
  std::vector<ChainOutcome> outcomes(config.etas.size());
  std::vector<std::exception_ptr> errors(config.etas.size());
  auto work = [&](std::size_t i) {
    try {
      outcomes[i] = run_chain(config, config.model, config.etas[i], prepared.split, base.split(i));
      outcomes[i].bnbp.reset();
      outcomes[i].lda.reset();
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const auto jobs = static_cast<std::size_t>(std::max(1, config.jobs));
  for (std::size_t start = 0; start < config.etas.size(); start += jobs) {
    std::vector<std::thread> pool;
    for (std::size_t i = start; i < std::min(start + jobs, config.etas.size()); ++i) pool.emplace_back(work, i);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  auto& sweep = artifacts.open("sweep.csv");
  sweep << kSummaryHeader;
  for (std::size_t i = 0; i < config.etas.size(); ++i) {
    write_summary_row(sweep, config.model, config.etas[i], outcomes[i]);
    write_trace_csv(artifacts.open("trace_eta_" + real(config.etas[i]) + ".csv"), outcomes[i].trace);
    log << "eta=" << config.etas[i] << ": mean K_J=" << outcomes[i].summary.mean_topics
        << ", perplexity=" << outcomes[i].perplexity << '\n';
  }
}

}  // namespace

// ---------------------------------------------------------------------------

int RunConfig::effective_burnin() const { return burnin >= 0 ? burnin : std::max(0, iters - collect); }

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (!kCommands.contains(command)) fail("unknown command '" + command + "'");
  if (iters < 0) fail("--iters must be nonnegative");
  if (collect < 0) fail("--collect must be nonnegative");
  if (thin < 1) fail("--thin must be at least 1");
  if (burnin > iters) fail("--burnin exceeds --iters");
  if (jobs < 1) fail("--jobs must be positive");
  if (!(eta > 0.0)) fail("--eta must be positive");
  const bool corpus_command = command == "train-bnbp" || command == "train-lda" || command == "sweep-eta";
  if (corpus_command) {
    if (corpus.empty()) fail(command + " needs --corpus");
    parse_corpus_format(format);
    if (min_doc_freq < 1) fail("--min-doc-freq must be at least 1");
    if (!(split > 0.0 && split < 1.0)) fail("--split must lie strictly between 0 and 1");
    if (iters < 1) fail(command + " needs --iters >= 1");
  }
  if (command == "train-lda" || (command == "sweep-eta" && model == "lda")) {
    if (topics < 1) fail("--topics must be positive");
    if (!(alpha > 0.0)) fail("--alpha must be positive");
  }
  if (command == "sweep-eta") {
    if (model != "bnbp" && model != "lda") fail("--model must be bnbp or lda");
    if (etas.empty()) fail("--etas grid is empty");
    for (double e : etas) {
      if (!(e > 0.0)) fail("--etas grid must be positive");
    }
  }
  if (command == "simulate-partition" || command == "prior-matrix") {
    if (groups < 1 || group_size < 0) fail("--groups must be positive and --group-size nonnegative");
    if (!(c > 0.0) || !(r > 0.0)) fail("--c and --r must be positive");
    if (gamma0 <= 0.0 && !(expected_clusters > 0.0)) fail("--gamma0 or --expected-clusters must be positive");
    if (command == "prior-matrix" && draws < 1) fail("--draws must be positive");
  }
  if (command == "eval-perplexity") {
    if (checkpoint.empty() || heldout.empty()) fail("eval-perplexity needs --checkpoint and --heldout");
    if (collect < 1) fail("eval-perplexity needs --collect >= 1");
  }
}

std::string RunConfig::header() const {
  std::ostringstream h;
  h << "# command=" << command << '\n';
  h << "# seed=" << seed << '\n';
  auto kv = [&h](const char* key, const auto& value) { h << "# " << key << '=' << value << '\n'; };
  if (command == "simulate-partition" || command == "prior-matrix") {
    kv("groups", groups);
    kv("group_size", group_size);
    kv("c", real(c));
    kv("gamma0", real(gamma0));
    kv("expected_clusters", real(expected_clusters));
    kv("r", real(r));
    kv("iters", iters);
    kv("draws", draws);
    return h.str();
  }
  if (command == "eval-perplexity") {
    kv("checkpoint", checkpoint);
    kv("heldout", heldout);
    kv("collect", collect);
    return h.str();
  }
  kv("corpus", corpus);
  kv("format", format);
  kv("vocab", vocab);
  kv("min_doc_freq", min_doc_freq);
  kv("split", real(split));
  kv("model", command == "train-bnbp" ? std::string("bnbp") : command == "train-lda" ? std::string("lda") : model);
  if (command == "sweep-eta") {
    std::string grid;
    for (double e : etas) grid += (grid.empty() ? "" : ",") + real(e);
    kv("etas", grid);
  } else {
    kv("eta", real(eta));
  }
  kv("alpha", real(alpha));
  kv("topics", topics);
  kv("iters", iters);
  kv("burnin", effective_burnin());
  kv("collect", iters - effective_burnin());
  kv("thin", thin);
  return h.str();
}

bool parse_args(int argc, char** argv, RunConfig& config, std::ostream& out) {
  CLI::App app{"Beta-negative binomial process partitions and topic models"};
  app.set_config("--config", "", "key=value configuration file; flags override it");
  app.add_option("command", config.command, "simulate-partition | prior-matrix | train-bnbp | train-lda | "
                                            "eval-perplexity | sweep-eta")
      ->required();
  app.add_option("--corpus", config.corpus, "corpus file");
  app.add_option("--format", config.format, "uci | lines")->capture_default_str();
  app.add_option("--vocab", config.vocab, "vocabulary file, one term per line");
  app.add_option("--min-doc-freq", config.min_doc_freq, "keep terms in at least this many documents")
      ->capture_default_str();
  app.add_option("--split", config.split, "fraction of each document used for training")->capture_default_str();
  app.add_option("--model", config.model, "bnbp | lda (sweep-eta)")->capture_default_str();
  app.add_option("--eta", config.eta, "topic Dirichlet smoothing")->capture_default_str();
  app.add_option("--etas", config.etas, "eta grid for sweep-eta")->delimiter(',');
  app.add_option("--alpha", config.alpha, "LDA Dirichlet concentration")->capture_default_str();
  app.add_option("--topics", config.topics, "LDA number of topics")->capture_default_str();
  app.add_option("--iters", config.iters, "Gibbs iterations")->capture_default_str();
  app.add_option("--burnin", config.burnin, "iterations before collection (default iters - collect)");
  app.add_option("--collect", config.collect, "collection window / number of draws")->capture_default_str();
  app.add_option("--thin", config.thin, "keep every n-th draw in the window")->capture_default_str();
  app.add_option("--seed", config.seed, "random seed")->capture_default_str();
  app.add_option("--out", config.out, "output directory")->capture_default_str();
  app.add_option("--jobs", config.jobs, "parallel chains for sweep-eta")->capture_default_str();
  app.add_option("--groups", config.groups, "number of groups J")->capture_default_str();
  app.add_option("--group-size", config.group_size, "points per group")->capture_default_str();
  app.add_option("--c", config.c, "concentration c")->capture_default_str();
  app.add_option("--gamma0", config.gamma0, "mass gamma0 (overrides --expected-clusters)");
  app.add_option("--expected-clusters", config.expected_clusters, "prior mean of K_J")->capture_default_str();
  app.add_option("--r", config.r, "dispersion r_j shared by all groups")->capture_default_str();
  app.add_option("--draws", config.draws, "prior-matrix draws")->capture_default_str();
  app.add_option("--checkpoint", config.checkpoint, "checkpoint from train-bnbp / train-lda");
  app.add_option("--heldout", config.heldout, "heldout counts from train-bnbp / train-lda");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return false;
  } catch (const CLI::ParseError& e) {
    throw std::invalid_argument(e.what());
  }
  if (app.count("--burnin") > 0 && app.count("--collect") > 0 && config.burnin + config.collect != config.iters) {
    throw std::invalid_argument("--burnin + --collect must equal --iters when both are given");
  }
  return true;
}

int run(const RunConfig& config, std::ostream& log, std::ostream& err) {
  try {
    config.validate();
    ArtifactSet artifacts(config.out, config.header());
    if (config.command == "simulate-partition") {
      simulate_partition(config, artifacts, log);
    } else if (config.command == "prior-matrix") {
      prior_matrix(config, artifacts, log);
    } else if (config.command == "train-bnbp") {
      train_model(config, "bnbp", artifacts, log);
    } else if (config.command == "train-lda") {
      train_model(config, "lda", artifacts, log);
    } else if (config.command == "eval-perplexity") {
      eval_perplexity(config, artifacts, log);
    } else if (config.command == "sweep-eta") {
      sweep_eta(config, artifacts, log);
    }
    artifacts.commit();
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int main(int argc, char** argv) {
  RunConfig config;
  try {
    if (!parse_args(argc, argv, config, std::cout)) return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return run(config, std::cout, std::cerr);
}

}  // namespace bnbp::cli
