#include "bnbp/checkpoint.hpp"

#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace bnbp {

namespace {

constexpr const char* kMagic = "# bnbp checkpoint v1";

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

double parse_real(const std::string& token) {
  char* end = nullptr;
  const double x = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw std::runtime_error("checkpoint: bad number '" + token + "'");
  return x;
}

template <typename State>
void write_common(std::ostream& out, const char* model, const State& state, const CheckpointMeta& meta) {
  out << kMagic << '\n';
  out << "model " << model << '\n';
  out << "iteration " << meta.iteration << '\n';
  out << "seed " << meta.seed << '\n';
  out << "rng " << meta.rng_state << '\n';
  out << "docs " << state.num_docs() << '\n';
  out << "terms " << state.num_terms() << '\n';
  out << "eta " << fmt(state.eta()) << '\n';
}

template <typename State>
void write_assignments(std::ostream& out, const State& state) {
  out << "assignments\n";
  for (std::size_t j = 0; j < state.num_docs(); ++j) {
    out << state.doc_length(j);
    for (int i = 0; i < state.doc_length(j); ++i) out << ' ' << state.term(j, i) << ':' << state.topic(j, i);
    out << '\n';
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const TopicModelState& state, const CheckpointMeta& meta) {
  if (!state.is_compact()) throw std::logic_error("write_checkpoint: state must be compact");
  write_common(out, "bnbp", state, meta);
  const BnbpParams& params = state.params();
  out << "gamma0 " << fmt(params.gamma0) << '\n';
  out << "c " << fmt(params.c) << '\n';
  out << "q_rest " << fmt(state.q_rest()) << '\n';
  out << "r";
  for (double r : params.r) out << ' ' << fmt(r);
  out << '\n';
  out << "topics " << state.num_topics() << '\n';
  out << "p";
  for (int k = 0; k < state.num_topics(); ++k) out << ' ' << fmt(state.p(k));
  out << '\n';
  out << "log1m_p";
  for (int k = 0; k < state.num_topics(); ++k) out << ' ' << fmt(state.log_one_minus_p(k));
  out << '\n';
  write_assignments(out, state);
}

void write_checkpoint(std::ostream& out, const LdaState& state, const CheckpointMeta& meta) {
  write_common(out, "lda", state, meta);
  out << "alpha " << fmt(state.alpha()) << '\n';
  out << "topics " << state.num_topics() << '\n';
  write_assignments(out, state);
}

LoadedCheckpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw std::runtime_error("checkpoint: missing header line");
  std::map<std::string, std::vector<std::string>> fields;
  std::string rng_state;
  while (std::getline(in, line) && line != "assignments") {
    std::istringstream words(line);
    std::string key;
    words >> key;
    if (key.empty()) continue;
    if (key == "rng") {
      std::getline(words >> std::ws, rng_state);
      continue;
    }
    std::vector<std::string> values;
    for (std::string w; words >> w;) values.push_back(w);
    fields[key] = std::move(values);
  }
  if (line != "assignments") throw std::runtime_error("checkpoint: missing assignments section");

  auto scalar = [&](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end() || it->second.size() != 1) throw std::runtime_error("checkpoint: missing '" + key + "'");
    return it->second.front();
  };
  auto reals = [&](const std::string& key) {
    auto it = fields.find(key);
    if (it == fields.end()) throw std::runtime_error("checkpoint: missing '" + key + "'");
    std::vector<double> xs;
    for (const auto& w : it->second) xs.push_back(parse_real(w));
    return xs;
  };

  LoadedCheckpoint ck;
  ck.model = scalar("model");
  ck.meta.iteration = std::stoi(scalar("iteration"));
  ck.meta.seed = std::stoull(scalar("seed"));
  ck.meta.rng_state = rng_state;
  const auto docs = static_cast<std::size_t>(std::stoull(scalar("docs")));
  ck.corpus.num_terms = std::stoi(scalar("terms"));
  const double eta = parse_real(scalar("eta"));
  const int topics = std::stoi(scalar("topics"));

  std::vector<std::vector<int>> labels(docs);
  ck.corpus.docs.resize(docs);
  for (std::size_t j = 0; j < docs; ++j) {
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint: truncated assignments");
    std::istringstream words(line);
    int m = -1;
    words >> m;
    if (m < 0) throw std::runtime_error("checkpoint: bad document line " + std::to_string(j + 1));
    for (int i = 0; i < m; ++i) {
      std::string pair;
      words >> pair;
      const auto colon = pair.find(':');
      if (colon == std::string::npos) throw std::runtime_error("checkpoint: bad token '" + pair + "'");
      ck.corpus.docs[j].push_back(std::stoi(pair.substr(0, colon)));
      labels[j].push_back(std::stoi(pair.substr(colon + 1)));
    }
  }

  if (ck.model == "bnbp") {
    BnbpParams params{parse_real(scalar("gamma0")), parse_real(scalar("c")), reals("r")};
    TopicModelState state(ck.corpus, eta, std::move(params), labels);
    if (state.num_topics() != topics) throw std::runtime_error("checkpoint: topic count mismatch");
    state.set_q_rest(parse_real(scalar("q_rest")));
    const auto p = reals("p");
    const auto log1m_p = reals("log1m_p");
    if (static_cast<int>(p.size()) != topics || static_cast<int>(log1m_p.size()) != topics) {
      throw std::runtime_error("checkpoint: topic weight count mismatch");
    }
    for (int k = 0; k < topics; ++k) state.set_topic_weight(k, p[k], log1m_p[k]);
    ck.bnbp.emplace(std::move(state));
  } else if (ck.model == "lda") {
    ck.lda.emplace(ck.corpus, topics, parse_real(scalar("alpha")), eta, labels);
  } else {
    throw std::runtime_error("checkpoint: unknown model '" + ck.model + "'");
  }
  return ck;
}

}  // namespace bnbp
