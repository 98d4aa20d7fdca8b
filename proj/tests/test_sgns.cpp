#include <cmath>
#include <cstring>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "entcoef/rng.hpp"
#include "entcoef/sgns.hpp"

using namespace entcoef;

namespace {

// Two vocabularies that only ever co-occur near block boundaries, so trained
// vectors should cluster by topic.
std::vector<std::string> two_topic_corpus(std::size_t blocks, std::size_t block_len,
                                          std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> tokens;
  tokens.reserve(blocks * block_len);
  for (std::size_t b = 0; b < blocks; ++b) {
    const char* topic = (b % 2 == 0) ? "a" : "b";
    for (std::size_t i = 0; i < block_len; ++i) {
      tokens.push_back(topic + std::to_string(rng.next_below(25)));
    }
  }
  return tokens;
}

std::vector<std::string> uniform_corpus(std::size_t types, std::size_t reps, std::uint64_t seed) {
  std::vector<std::string> tokens;
  tokens.reserve(types * reps);
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t t = 0; t < types; ++t) tokens.push_back("w" + std::to_string(t));
  }
  Rng rng(seed);
  for (std::size_t i = tokens.size(); i > 1; --i) {
    std::swap(tokens[i - 1], tokens[rng.next_below(i)]);
  }
  return tokens;
}

SgnsConfig small_config() {
  SgnsConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 5;
  cfg.window = 5;
  cfg.min_count = 1;
  cfg.subsample_t = 1e-2;  // keep everything on these near-uniform fixtures
  cfg.seed = 11;
  return cfg;
}

EmbeddingSet random_embeddings(const std::vector<std::string>& vocab, int dim,
                               std::uint64_t seed) {
  EmbeddingSet emb;
  emb.vocab = vocab;
  emb.rebuild_index();
  emb.unigram_counts.assign(vocab.size(), 1);
  emb.input_vectors.resize(vocab.size(), dim);
  emb.output_vectors.resize(vocab.size(), dim);
  Rng rng(seed);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    for (int j = 0; j < dim; ++j) {
      emb.input_vectors(i, j) = 0.01 * rng.next_normal();
      emb.output_vectors(i, j) = 0.01 * rng.next_normal();
    }
  }
  emb.config.window = 5;
  emb.config.negatives = 5;
  return emb;
}

bool same_bytes(const RowMatrixXd& a, const RowMatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

double mean_cosine(const RowMatrixXd& m, std::size_t lo_a, std::size_t hi_a, std::size_t lo_b,
                   std::size_t hi_b) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = lo_a; i < hi_a; ++i) {
    for (std::size_t j = lo_b; j < hi_b; ++j) {
      if (i == j) continue;
      total += m.row(i).dot(m.row(j)) / (m.row(i).norm() * m.row(j).norm());
      ++n;
    }
  }
  return total / n;
}

double unigram_entropy(const std::vector<std::string>& tokens) {
  std::unordered_map<std::string, double> counts;
  for (const auto& t : tokens) counts[t] += 1.0;
  double h = 0.0;
  for (const auto& [tok, c] : counts) {
    double p = c / tokens.size();
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

TEST_CASE("trained vectors separate the two topics") {
  auto corpus = two_topic_corpus(2500, 20, 5);
  EmbeddingSet emb = train_sgns(corpus, small_config());
  REQUIRE(emb.vocab.size() == 50);

  // a-types and b-types each occupy a contiguous id range only by accident of
  // first-seen order, so index them explicitly.
  std::vector<std::size_t> a_ids, b_ids;
  for (std::size_t i = 0; i < emb.vocab.size(); ++i) {
    (emb.vocab[i][0] == 'a' ? a_ids : b_ids).push_back(i);
  }
  REQUIRE(a_ids.size() == 25);
  REQUIRE(b_ids.size() == 25);

  RowMatrixXd sorted(emb.vocab.size(), emb.config.dim);
  std::size_t row = 0;
  for (std::size_t id : a_ids) sorted.row(row++) = emb.input_vectors.row(id);
  for (std::size_t id : b_ids) sorted.row(row++) = emb.input_vectors.row(id);
  double intra_a = mean_cosine(sorted, 0, 25, 0, 25);
  double intra_b = mean_cosine(sorted, 25, 50, 25, 50);
  double cross = mean_cosine(sorted, 0, 25, 25, 50);
  CHECK(intra_a > cross);
  CHECK(intra_b > cross);
}

TEST_CASE("training is deterministic for a fixed seed") {
  auto corpus = two_topic_corpus(400, 20, 5);
  SgnsConfig cfg = small_config();
  cfg.epochs = 2;
  EmbeddingSet first = train_sgns(corpus, cfg);
  EmbeddingSet second = train_sgns(corpus, cfg);
  CHECK(same_bytes(first.input_vectors, second.input_vectors));
  CHECK(same_bytes(first.output_vectors, second.output_vectors));
  CHECK(first.train_epoch_losses == second.train_epoch_losses);
}

TEST_CASE("adam optimizer trains deterministically too") {
  auto corpus = two_topic_corpus(200, 20, 5);
  SgnsConfig cfg = small_config();
  cfg.epochs = 2;
  cfg.optimizer = SgnsOptimizer::adam;
  cfg.initial_lr = 0.005;
  EmbeddingSet first = train_sgns(corpus, cfg);
  EmbeddingSet second = train_sgns(corpus, cfg);
  CHECK(same_bytes(first.input_vectors, second.input_vectors));
  CHECK(same_bytes(first.output_vectors, second.output_vectors));
  CHECK(first.input_vectors.allFinite());
}

TEST_CASE("config validation rejects degenerate settings") {
  auto corpus = two_topic_corpus(50, 20, 5);
  SgnsConfig cfg = small_config();
  cfg.dim = 0;
  CHECK_THROWS_AS(train_sgns(corpus, cfg), Error);
  cfg = small_config();
  cfg.dim = 1;
  CHECK_THROWS_AS(train_sgns(corpus, cfg), Error);
  cfg = small_config();
  cfg.epochs = 0;
  CHECK_THROWS_AS(train_sgns(corpus, cfg), Error);
  cfg = small_config();
  cfg.negatives = 0;
  CHECK_THROWS_AS(train_sgns(corpus, cfg), Error);
  cfg = small_config();
  cfg.subsample_t = 0.0;
  CHECK_THROWS_AS(train_sgns(corpus, cfg), Error);
}

TEST_CASE("corpus below the window threshold is rejected") {
  std::vector<std::string> tiny(20, "tok");
  SgnsConfig cfg = small_config();
  CHECK_THROWS_WITH(train_sgns(tiny, cfg),
                    Catch::Matchers::ContainsSubstring("corpus too small"));
  // min_count filtering can empty an otherwise long stream
  std::vector<std::string> singletons;
  for (int i = 0; i < 100; ++i) singletons.push_back("u" + std::to_string(i));
  cfg.min_count = 2;
  CHECK_THROWS_AS(train_sgns(singletons, cfg), Error);
}

TEST_CASE("epoch losses are non-increasing within tolerance") {
  auto corpus = two_topic_corpus(1000, 20, 9);
  SgnsConfig cfg = small_config();
  cfg.epochs = 6;
  EmbeddingSet emb = train_sgns(corpus, cfg);
  REQUIRE(emb.train_epoch_losses.size() == 6);
  for (std::size_t i = 1; i < emb.train_epoch_losses.size(); ++i) {
    CHECK(emb.train_epoch_losses[i] <= emb.train_epoch_losses[i - 1] * 1.05);
  }
}

TEST_CASE("subsampling keeps every rare token") {
  // At or below the threshold frequency the keep probability saturates at 1,
  // so rare types are never dropped from the stream.
  CHECK(detail::keep_probability(1e-4, 1e-4, false) == 1.0);
  CHECK(detail::keep_probability(5e-5, 1e-4, false) == 1.0);
  double frequent = detail::keep_probability(0.1, 1e-4, false);
  CHECK(frequent < 0.05);
  CHECK(frequent > 0.0);
  // Monotone: more frequent means kept less often.
  CHECK(detail::keep_probability(0.2, 1e-4, false) < frequent);
  // The flipped reading turns the same expression into a discard probability.
  CHECK(detail::keep_probability(0.1, 1e-4, true) == Catch::Approx(1.0 - frequent));
  CHECK(detail::keep_probability(5e-5, 1e-4, true) == 0.0);
}

TEST_CASE("uninformative embeddings score at the uniform baseline") {
  std::vector<std::string> vocab;
  for (int i = 0; i < 100; ++i) vocab.push_back("w" + std::to_string(i));
  EmbeddingSet emb = random_embeddings(vocab, 20, 3);
  auto heldout = uniform_corpus(100, 20, 4);
  LossReport report = eval_loss(emb, heldout, LossObjective::full_softmax);
  CHECK(report.nats_per_prediction == Catch::Approx(std::log(100.0)).margin(0.1));
  CHECK(report.predictions > 0);
}

TEST_CASE("training beats random vectors on held-out text") {
  auto corpus = two_topic_corpus(2500, 20, 5);
  auto heldout = two_topic_corpus(250, 20, 77);
  EmbeddingSet trained = train_sgns(corpus, small_config());
  EmbeddingSet random = random_embeddings(trained.vocab, small_config().dim, 21);
  double trained_loss =
      eval_loss(trained, heldout, LossObjective::full_softmax).nats_per_prediction;
  double random_loss =
      eval_loss(random, heldout, LossObjective::full_softmax).nats_per_prediction;
  CHECK(trained_loss < random_loss);

  // Negative-sampling mode reports a finite, reproducible score.
  LossReport ns1 = eval_loss(trained, heldout, LossObjective::negative_sampling);
  LossReport ns2 = eval_loss(trained, heldout, LossObjective::negative_sampling);
  CHECK(std::isfinite(ns1.nats_per_prediction));
  CHECK(ns1.nats_per_prediction >= 0.0);
  CHECK(ns1.nats_per_prediction == ns2.nats_per_prediction);
}

TEST_CASE("evaluation input checks") {
  EmbeddingSet emb = random_embeddings({"a", "b"}, 4, 1);
  CHECK_THROWS_AS(eval_loss(emb, {}, LossObjective::full_softmax), Error);
  CHECK_THROWS_AS(eval_loss(emb, {"zzz", "yyy"}, LossObjective::full_softmax), Error);
}

TEST_CASE("refit with unchanged inputs stays near the trained loss") {
  auto corpus = two_topic_corpus(1500, 20, 5);
  EmbeddingSet emb = train_sgns(corpus, small_config());
  RowMatrixXd inputs_before = emb.input_vectors;
  double trained_loss = eval_loss(emb, corpus, LossObjective::full_softmax).nats_per_prediction;

  EmbeddingSet refit = refit_output_layer(emb, emb.input_vectors, corpus);
  CHECK(same_bytes(refit.input_vectors, emb.input_vectors));
  CHECK(same_bytes(emb.input_vectors, inputs_before));
  double refit_loss =
      eval_loss(refit, corpus, LossObjective::full_softmax).nats_per_prediction;
  CHECK(refit_loss <= trained_loss + 1e-9);
  CHECK(std::abs(refit_loss - trained_loss) <= 0.02);
  // Refitting is itself deterministic.
  EmbeddingSet refit2 = refit_output_layer(emb, emb.input_vectors, corpus);
  CHECK(same_bytes(refit.output_vectors, refit2.output_vectors));
}

TEST_CASE("refit on zeroed inputs collapses to the unigram baseline") {
  auto corpus = uniform_corpus(60, 120, 8);
  SgnsConfig cfg = small_config();
  cfg.epochs = 3;
  EmbeddingSet emb = train_sgns(corpus, cfg);
  RowMatrixXd zeros = RowMatrixXd::Zero(emb.vocab.size(), cfg.dim);
  EmbeddingSet refit = refit_output_layer(emb, zeros, corpus);
  double loss = eval_loss(refit, corpus, LossObjective::full_softmax).nats_per_prediction;
  // Zero inputs force uniform predictions; on this corpus the unigram
  // distribution is itself uniform, so the two baselines coincide.
  CHECK(loss == Catch::Approx(std::log(60.0)).margin(1e-9));
  CHECK(std::abs(loss - unigram_entropy(corpus)) <= 0.05);
}

TEST_CASE("refit stays at or below the uniform ceiling") {
  auto corpus = two_topic_corpus(1000, 20, 13);
  EmbeddingSet emb = train_sgns(corpus, small_config());
  EmbeddingSet refit = refit_output_layer(emb, emb.input_vectors, corpus);
  double loss = eval_loss(refit, corpus, LossObjective::full_softmax).nats_per_prediction;
  CHECK(loss <= std::log(static_cast<double>(emb.vocab.size())) + 0.1);
}

TEST_CASE("refit rejects mismatched shapes and unfreezing") {
  auto corpus = two_topic_corpus(200, 20, 5);
  SgnsConfig cfg = small_config();
  cfg.epochs = 1;
  EmbeddingSet emb = train_sgns(corpus, cfg);
  RowMatrixXd wrong_cols = RowMatrixXd::Zero(emb.vocab.size(), cfg.dim + 1);
  CHECK_THROWS_AS(refit_output_layer(emb, wrong_cols, corpus), Error);
  RowMatrixXd wrong_rows = RowMatrixXd::Zero(emb.vocab.size() + 1, cfg.dim);
  CHECK_THROWS_AS(refit_output_layer(emb, wrong_rows, corpus), Error);
  CHECK_THROWS_AS(refit_output_layer(emb, emb.input_vectors, corpus, false), Error);
}

TEST_CASE("embedding matrices round-trip through the text format") {
  auto corpus = two_topic_corpus(200, 20, 5);
  SgnsConfig cfg = small_config();
  cfg.epochs = 1;
  EmbeddingSet emb = train_sgns(corpus, cfg);

  std::ostringstream in_file, out_file;
  write_embedding_matrix(emb, emb.input_vectors, in_file);
  write_embedding_matrix(emb, emb.output_vectors, out_file);

  std::istringstream in_read(in_file.str()), out_read(out_file.str());
  EmbeddingSet loaded = load_embedding_set(in_read, out_read, cfg);
  CHECK(loaded.vocab == emb.vocab);
  CHECK(same_bytes(loaded.input_vectors, emb.input_vectors));
  CHECK(same_bytes(loaded.output_vectors, emb.output_vectors));

  std::ostringstream again;
  write_embedding_matrix(loaded, loaded.input_vectors, again);
  CHECK(again.str() == in_file.str());

  std::istringstream bad("2 3\na 1 2 3\n");
  CHECK_THROWS_AS(read_embedding_matrix(bad), Error);
  std::istringstream in2(in_file.str());
  std::ostringstream other_vocab_stream;
  EmbeddingSet other = emb;
  other.vocab[0] = "renamed";
  write_embedding_matrix(other, other.output_vectors, other_vocab_stream);
  std::istringstream out2(other_vocab_stream.str());
  CHECK_THROWS_AS(load_embedding_set(in2, out2, cfg), Error);
}
