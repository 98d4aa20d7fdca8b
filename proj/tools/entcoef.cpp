// entcoef: driver for the entropy coefficient pipeline. Subcommands cover
// the full path from an annotated corpus to the removal-cost report: rho
// estimation, tag conflation ladders, embedding training and evaluation,
// iterative nullspace removal, loss deltas, the exact small-world checks,
// and the trend regression.
//
// Every run prints a human summary to stdout and writes TSV reports under
// the output directory. Reports carry the seed and a hash of the effective
// settings, so reruns are byte-identical and mismatched reports are refused.
//
// Exit codes: 0 ok, 1 verification failure, 2 input error, 3 config error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "entcoef/config.hpp"
#include "entcoef/conflation.hpp"
#include "entcoef/corpus.hpp"
#include "entcoef/errors.hpp"
#include "entcoef/infotheory.hpp"
#include "entcoef/inlp.hpp"
#include "entcoef/report.hpp"
#include "entcoef/rho.hpp"
#include "entcoef/rng.hpp"
#include "entcoef/sgns.hpp"
#include "entcoef/stats.hpp"
#include "entcoef/worlds.hpp"

namespace {

using namespace entcoef;

struct GlobalOpts {
  std::string config_path;
  SettingsMap flags;  // settings key -> raw flag value, wins over the file
  int threads = 1;
  bool bits = false;
};

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string sig6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Entropies and losses are computed in nats; --bits only changes how stdout
// renders them. Report files always stay in nats.
double shown(const GlobalOpts& g, double nats) { return g.bits ? nats / std::log(2.0) : nats; }

const char* unit(const GlobalOpts& g) { return g.bits ? "bits" : "nats"; }

PipelineConfig effective_config(const GlobalOpts& g) {
  if (g.threads < 1) fail_config("thread count must be at least 1");
  if (g.threads > 1) {
    std::cerr << "note: parallel workers are not compiled in; running single-threaded\n";
  }
  return load_pipeline_config(g.config_path, g.flags);
}

std::filesystem::path ensure_outdir(const PipelineConfig& cfg) {
  std::filesystem::path dir = cfg.output_dir.empty() ? "." : cfg.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail_config("cannot create output directory: " + dir.string());
  return dir;
}

std::ofstream must_open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail_config("cannot write file: " + path.string());
  return out;
}

CorpusFormat format_of(const PipelineConfig& cfg) { return corpus_format_from_name(cfg.format); }

TagColumn tag_column_of(const PipelineConfig& cfg) {
  return cfg.tag_column == "xpos" ? TagColumn::xpos : TagColumn::upos;
}

AnnotatedCorpus load_annotation(const PipelineConfig& cfg) {
  if (cfg.annotation_path.empty()) {
    fail_config("no annotations path given (use --annotation or corpus.annotations)");
  }
  return parse_corpus_file(cfg.annotation_path, format_of(cfg), tag_column_of(cfg));
}

std::vector<std::string> load_raw_corpus(const PipelineConfig& cfg) {
  if (cfg.corpus_path.empty()) {
    fail_config("no raw corpus path given (use --corpus or corpus.path)");
  }
  std::ifstream in(cfg.corpus_path);
  if (!in) fail_config("cannot open corpus file: " + cfg.corpus_path);
  std::vector<std::string> tokens = read_raw_tokens(in);
  if (tokens.empty()) fail_input("corpus file has no tokens: " + cfg.corpus_path);
  return tokens;
}

EmbeddingSet load_embeddings(const PipelineConfig& cfg, const std::string& in_path,
                             const std::string& out_path) {
  std::ifstream in_file(in_path);
  if (!in_file) fail_config("cannot open input-vector file: " + in_path);
  std::ifstream out_file(out_path);
  if (!out_file) fail_config("cannot open output-vector file: " + out_path);
  return load_embedding_set(in_file, out_file, cfg.sgns);
}

ReportMeta meta_for(const PipelineConfig& cfg, const std::string& extra_settings = "") {
  ReportMeta meta;
  meta.seed = cfg.seed;
  meta.config_hash = settings_hash(canonical_settings(cfg) + extra_settings);
  return meta;
}

// ---------------------------------------------------------------- rho ----

void run_rho(const GlobalOpts& g) {
  PipelineConfig cfg = effective_config(g);
  AnnotatedCorpus annotation = load_annotation(cfg);
  RhoEstimate est = estimate_rho(annotation, cfg.rho);

  std::cout << "rho=" << fixed6(est.rho) << '\n';
  std::cout << "h_tags=" << fixed6(shown(g, est.h_tags.nats_per_token)) << ' ' << unit(g)
            << "/token over " << est.h_tags.token_count << " held-out tags\n";
  std::cout << "h_tokens=" << fixed6(shown(g, est.h_tokens.nats_per_token)) << ' ' << unit(g)
            << "/token over " << est.h_tokens.token_count << " held-out tokens\n";
  std::cout << "estimator=" << est.estimator_name << '\n';

  ReportMeta meta = meta_for(cfg);
  std::filesystem::path path = ensure_outdir(cfg) / "rho_report.tsv";
  require_hash_compatible(path.string(), meta);
  std::ofstream out = must_open_out(path);
  write_report_meta(meta, out);
  out << "rho\th_tags\th_tokens\theldout_tags\theldout_tokens\testimator\n";
  out << detail::report_num(est.rho) << '\t' << detail::report_num(est.h_tags.nats_per_token)
      << '\t' << detail::report_num(est.h_tokens.nats_per_token) << '\t'
      << est.h_tags.token_count << '\t' << est.h_tokens.token_count << '\t'
      << est.estimator_name << '\n';
  std::cout << "wrote " << path.string() << '\n';
}

// ----------------------------------------------------------- conflate ----

void run_conflate(const GlobalOpts& g, int steps) {
  PipelineConfig cfg = effective_config(g);
  if (steps < 1) fail_config("conflation steps must be at least 1");
  AnnotatedCorpus corpus = load_annotation(cfg);
  for (int k = 1; k <= steps; ++k) {
    LadderStep step;
    corpus = conflate_step(corpus, static_cast<std::size_t>(k), &step);
    std::cout << "step " << k << ": merged '" << step.merged_pair.first << "' + '"
              << step.merged_pair.second << "' -> '" << step.new_tag << "' ("
              << corpus.tagset.size() << " tags left)\n";
  }
  // The conflated corpus is written as a plain annotation fixture so it can
  // be fed back into any subcommand; fixture formats carry no metadata.
  std::filesystem::path path = ensure_outdir(cfg) / "conflated.tsv";
  std::ofstream out = must_open_out(path);
  serialize_tsv(corpus, out);
  std::cout << "wrote " << path.string() << '\n';
}

// --------------------------------------------------------- sgns-train ----

void run_sgns_train(const GlobalOpts& g) {
  PipelineConfig cfg = effective_config(g);
  std::vector<std::string> tokens = load_raw_corpus(cfg);
  EmbeddingSet emb = train_sgns(tokens, cfg.sgns);
  std::cout << "trained on " << tokens.size() << " tokens, vocabulary " << emb.vocab.size()
            << ", dim " << cfg.sgns.dim << '\n';
  for (std::size_t e = 0; e < emb.train_epoch_losses.size(); ++e) {
    std::cout << "epoch " << (e + 1)
              << ": ns_loss=" << fixed6(shown(g, emb.train_epoch_losses[e])) << ' ' << unit(g)
              << "/pair\n";
  }
  std::filesystem::path dir = ensure_outdir(cfg);
  std::filesystem::path in_path = dir / "vectors.in.tsv";
  std::filesystem::path out_path = dir / "vectors.out.tsv";
  {
    std::ofstream out = must_open_out(in_path);
    write_embedding_matrix(emb, emb.input_vectors, out);
  }
  {
    std::ofstream out = must_open_out(out_path);
    write_embedding_matrix(emb, emb.output_vectors, out);
  }
  std::cout << "wrote " << in_path.string() << " and " << out_path.string() << '\n';
}

// ---------------------------------------------------------- sgns-eval ----

void run_sgns_eval(const GlobalOpts& g, const std::string& in_vec, const std::string& out_vec,
                   const std::string& heldout_path, const std::string& objective) {
  PipelineConfig cfg = effective_config(g);
  LossObjective obj;
  if (objective == "softmax") {
    obj = LossObjective::full_softmax;
  } else if (objective == "ns") {
    obj = LossObjective::negative_sampling;
  } else {
    fail_config("unknown objective: " + objective + " (expected ns or softmax)");
  }
  EmbeddingSet emb = load_embeddings(cfg, in_vec, out_vec);
  std::ifstream held_file(heldout_path);
  if (!held_file) fail_config("cannot open held-out file: " + heldout_path);
  std::vector<std::string> heldout = read_raw_tokens(held_file);

  LossReport report = eval_loss(emb, heldout, obj);
  std::cout << "objective=" << objective
            << " loss=" << fixed6(shown(g, report.nats_per_prediction)) << ' ' << unit(g)
            << "/prediction predictions=" << report.predictions << '\n';

  std::string extra = "eval.heldout = " + heldout_path + "\n" +
                      "eval.input_vectors = " + in_vec + "\n" +
                      "eval.objective = " + objective + "\n" +
                      "eval.output_vectors = " + out_vec + "\n";
  ReportMeta meta = meta_for(cfg, extra);
  std::filesystem::path path = ensure_outdir(cfg) / "eval_report.tsv";
  require_hash_compatible(path.string(), meta);
  std::ofstream out = must_open_out(path);
  write_report_meta(meta, out);
  out << "objective\tloss_nats\tpredictions\n";
  out << objective << '\t' << detail::report_num(report.nats_per_prediction) << '\t'
      << report.predictions << '\n';
  std::cout << "wrote " << path.string() << '\n';
}

// --------------------------------------------------------------- inlp ----

void run_inlp_cmd(const GlobalOpts& g, const std::string& in_vec, const std::string& out_vec,
                  const std::string& probe_loss) {
  PipelineConfig cfg = effective_config(g);
  ProbeLoss loss_kind;
  if (probe_loss == "logistic") {
    loss_kind = ProbeLoss::logistic;
  } else if (probe_loss == "hinge") {
    loss_kind = ProbeLoss::hinge;
  } else {
    fail_config("unknown probe loss: " + probe_loss + " (expected logistic or hinge)");
  }
  EmbeddingSet emb = load_embeddings(cfg, in_vec, out_vec);
  AnnotatedCorpus annotation = load_annotation(cfg);
  double coverage = 0.0;
  LabeledVectors data = labeled_vectors_from_annotation(emb, annotation, &coverage);
  InlpResult result = run_inlp(data, cfg.inlp_epsilon, cfg.inlp_max_iters, cfg.seed, loss_kind);

  std::cout << "iterations=" << result.iterations
            << " final_acc=" << fixed6(result.final_probe_accuracy)
            << " majority=" << fixed6(result.majority)
            << " converged=" << (result.converged ? "yes" : "no")
            << " coverage=" << fixed6(coverage) << '\n';

  std::filesystem::path dir = ensure_outdir(cfg);
  std::filesystem::path proj_path = dir / "projection.tsv";
  {
    std::ofstream out = must_open_out(proj_path);
    save_projection(result.stack.composed, out);
  }
  std::string extra = "inlp.input_vectors = " + in_vec + "\n" +
                      "inlp.output_vectors = " + out_vec + "\n" +
                      "inlp.probe_loss = " + probe_loss + "\n";
  ReportMeta meta = meta_for(cfg, extra);
  std::filesystem::path rep_path = dir / "inlp_report.tsv";
  require_hash_compatible(rep_path.string(), meta);
  std::ofstream out = must_open_out(rep_path);
  write_report_meta(meta, out);
  out << "iterations\tfinal_acc\tmajority\tstatus\tprobe_rows\ttags\tcoverage\n";
  out << result.iterations << '\t' << detail::report_num(result.final_probe_accuracy) << '\t'
      << detail::report_num(result.majority) << '\t'
      << (result.converged ? "ok" : "max-iters") << '\t' << data.y.size() << '\t'
      << data.tagset.size() << '\t' << detail::report_num(coverage) << '\n';
  std::cout << "wrote " << proj_path.string() << " and " << rep_path.string() << '\n';
}

// --------------------------------------------------------- delta-loss ----

LadderRow row_from_delta(std::size_t annotation_id, double rho, const DeltaReport& rep) {
  LadderRow row;
  row.annotation_id = annotation_id;
  row.rho = rho;
  row.has_delta = true;
  row.iterations = rep.result.iterations;
  row.final_acc = rep.result.final_probe_accuracy;
  row.majority = rep.result.majority;
  row.delta_nats = rep.delta;
  row.inlp_converged = rep.result.converged;
  return row;
}

void print_delta_row(const GlobalOpts& g, const LadderRow& row) {
  std::cout << "annotation " << row.annotation_id << ": rho=" << fixed6(row.rho)
            << " iterations=" << row.iterations << " final_acc=" << fixed6(row.final_acc)
            << " majority=" << fixed6(row.majority)
            << " delta=" << fixed6(shown(g, row.delta_nats)) << ' ' << unit(g)
            << (row.inlp_converged ? "" : " [max-iters]") << '\n';
}

void run_delta_loss(const GlobalOpts& g, const std::string& in_vec, const std::string& out_vec) {
  PipelineConfig cfg = effective_config(g);
  EmbeddingSet emb = load_embeddings(cfg, in_vec, out_vec);
  AnnotatedCorpus annotation = load_annotation(cfg);
  std::vector<std::string> corpus = load_raw_corpus(cfg);
  DeltaReport rep =
      delta_loss(emb, annotation, corpus, cfg.inlp_epsilon, nullptr, cfg.inlp_max_iters, cfg.rho);

  LadderReport report;
  std::string extra = "delta.input_vectors = " + in_vec + "\n" +
                      "delta.output_vectors = " + out_vec + "\n";
  report.meta = meta_for(cfg, extra);
  report.rows.push_back(row_from_delta(0, rep.rho_input.rho, rep));
  print_delta_row(g, report.rows[0]);
  std::cout << "loss_filtered=" << fixed6(shown(g, rep.loss_filtered)) << ' ' << unit(g)
            << " loss_baseline=" << fixed6(shown(g, rep.loss_baseline)) << ' ' << unit(g)
            << " coverage=" << fixed6(rep.coverage) << '\n';

  std::filesystem::path path = ensure_outdir(cfg) / "delta_report.tsv";
  require_hash_compatible(path.string(), report.meta);
  std::ofstream out = must_open_out(path);
  write_ladder_report(report, out);
  std::cout << "wrote " << path.string() << '\n';
}

// ------------------------------------------------------------- ladder ----

void run_ladder(const GlobalOpts& g) {
  PipelineConfig cfg = effective_config(g);
  AnnotatedCorpus annotation = load_annotation(cfg);
  std::vector<std::string> corpus = load_raw_corpus(cfg);

  // A single-tag corpus cannot be conflated further; it forms a one-entry
  // ladder of its own.
  ConflationLadder ladder;
  if (tag_histogram(annotation).distinct() < 2) {
    ladder.original = annotation;
  } else {
    ladder = conflate_ladder(annotation);
  }
  const std::size_t m = ladder.annotation_count();
  std::cout << "ladder of " << m << " annotations over "
            << tag_histogram(annotation).distinct() << " tags\n";

  EmbeddingSet emb = train_sgns(corpus, cfg.sgns);
  std::cout << "trained embeddings: vocabulary " << emb.vocab.size() << ", dim "
            << cfg.sgns.dim << ", " << cfg.sgns.epochs << " epochs\n";
  double baseline = delta_baseline(emb, corpus);
  std::cout << "baseline refit loss=" << fixed6(shown(g, baseline)) << ' ' << unit(g)
            << "/prediction\n";

  const std::size_t select_every =
      cfg.ladder_select_every > 0 ? cfg.ladder_select_every : (m + 7) / 8;

  LadderReport report;
  report.meta = meta_for(cfg);
  for (std::size_t id = 0; id < m; ++id) {
    const AnnotatedCorpus& step_corpus = ladder.corpus_at(id);
    RhoEstimate est = estimate_rho(step_corpus, cfg.rho);
    bool selected = (id % select_every == 0) || id + 1 == m;
    if (selected) {
      DeltaReport rep = delta_loss(emb, step_corpus, corpus, cfg.inlp_epsilon, &baseline,
                                   cfg.inlp_max_iters, cfg.rho);
      report.rows.push_back(row_from_delta(id, est.rho, rep));
      print_delta_row(g, report.rows.back());
    } else {
      LadderRow row;
      row.annotation_id = id;
      row.rho = est.rho;
      report.rows.push_back(row);
      std::cout << "annotation " << id << ": rho=" << fixed6(est.rho) << '\n';
    }
  }

  std::filesystem::path dir = ensure_outdir(cfg);
  std::filesystem::path report_path = dir / "ladder_report.tsv";
  std::filesystem::path plot_path = dir / "ladder_plot.tsv";
  require_hash_compatible(report_path.string(), report.meta);
  require_hash_compatible(plot_path.string(), report.meta);
  {
    std::ofstream out = must_open_out(report_path);
    write_ladder_report(report, out);
  }
  {
    std::ofstream out = must_open_out(plot_path);
    write_report_meta(report.meta, out);
    out << "rho\tdelta_nats\n";
    for (const LadderRow& row : report.rows) {
      if (!row.has_delta) continue;
      out << detail::report_num(row.rho) << '\t' << detail::report_num(row.delta_nats) << '\n';
    }
  }
  std::cout << "wrote " << report_path.string() << " and " << plot_path.string() << '\n';
}

// ------------------------------------------------------------- verify ----

void run_verify(const GlobalOpts& g, long long worlds, std::size_t max_alphabet,
                int decoder_iters, bool inject_fault) {
  PipelineConfig cfg = effective_config(g);
  if (worlds < 0) fail_config("world count must be non-negative");
  if (worlds == 0) fail_config("nothing to verify: world count is 0");
  if (decoder_iters < 1) fail_config("decoder iterations must be positive");

  std::vector<WorldRow> rows;
  rows.reserve(static_cast<std::size_t>(worlds) + 1);
  std::size_t applicable = 0;
  std::size_t failures = 0;
  std::string first_failure;
  std::uint64_t state = cfg.seed;

  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(worlds); ++i) {
    DiscreteWorld world = random_world(splitmix64(state), max_alphabet);
    const std::size_t n = world.w_pmf.probs.size();
    OutcomeMap identity(n);
    for (std::size_t k = 0; k < n; ++k) identity[k] = k;

    // Identities on the (annotation, sentence) joint, with the embedding map
    // as the post-processing function.
    DiscreteJoint j = joint_of_maps(world.w_pmf, world.f_T, world.t_count, identity, n);
    PropertyReport props = verify_properties(j, world.g_x, world.x_count);
    Lemma1Result l1 = lemma1_check(world);
    Lemma2Result l2 = lemma2_check(world, decoder_iters);

    rows.push_back(WorldRow{i, l1.rho, l1.sigma, l1.delta_I, l1.bound, l1.holds});
    if (l1.applicable) ++applicable;

    std::string why;
    if (!props.all_pass) {
      for (const auto& c : props.checks) {
        if (!c.pass) {
          why = "identity '" + c.name + "' off by " + sig6(c.residual);
          break;
        }
      }
    } else if (!l1.holds) {
      why = "removal bound violated: delta_I=" + sig6(l1.delta_I) + " < bound=" +
            sig6(l1.bound);
    } else if (!l2.converged) {
      why = "decoder fit did not converge";
    } else if (l2.gap > 0.01) {
      why = "loss-change gap " + sig6(l2.gap) + " exceeds 0.01";
    }
    if (!why.empty()) {
      ++failures;
      if (first_failure.empty()) first_failure = "world " + std::to_string(i) + ": " + why;
    }
  }

  if (inject_fault) {
    // Negative control for the failure path: a filter that forgot to remove
    // anything. The bound stays positive while the information drop is zero,
    // so the check must report a violation.
    DiscreteWorld bad = two_bit_world();
    bad.h_xtilde = bad.g_x;
    bad.xt_count = bad.x_count;
    const std::size_t n = bad.w_pmf.probs.size();
    OutcomeMap identity(n);
    for (std::size_t k = 0; k < n; ++k) identity[k] = k;
    double h_w = entropy(bad.w_pmf);
    double i_tw = mutual_information(
        joint_of_maps(bad.w_pmf, bad.f_T, bad.t_count, identity, n));
    double i_wx = mutual_information(
        joint_of_maps(bad.w_pmf, identity, n, bad.g_x, bad.x_count));
    double i_wxt = mutual_information(
        joint_of_maps(bad.w_pmf, identity, n, bad.h_xtilde, bad.xt_count));
    WorldRow row;
    row.world_id = static_cast<std::uint64_t>(worlds);
    row.rho = i_tw / h_w;
    // A broken filter leaks annotation information, so its world violates
    // the independence precondition; sigma here is computed the same way but
    // the bound no longer has that excuse.
    row.sigma = i_wx / h_w;
    row.delta_I = i_wx - i_wxt;
    row.bound = (row.rho + row.sigma - 1.0) * h_w;
    row.holds = row.delta_I >= row.bound - 1e-12;
    rows.push_back(row);
    if (!row.holds) {
      ++failures;
      if (first_failure.empty()) {
        first_failure = "world " + std::to_string(row.world_id) +
                        ": injected broken filter, delta_I=" + sig6(row.delta_I) +
                        " < bound=" + sig6(row.bound);
      }
    }
    std::cout << "injected broken-filter fixture as world " << row.world_id << '\n';
  }

  std::string extra = "verify.decoder_iters = " + std::to_string(decoder_iters) + "\n" +
                      std::string("verify.inject_fault = ") +
                      (inject_fault ? "true" : "false") + "\n" +
                      "verify.max_alphabet = " + std::to_string(max_alphabet) + "\n" +
                      "verify.worlds = " + std::to_string(worlds) + "\n";
  ReportMeta meta = meta_for(cfg, extra);
  std::filesystem::path path = ensure_outdir(cfg) / "verify_report.tsv";
  require_hash_compatible(path.string(), meta);
  {
    std::ofstream out = must_open_out(path);
    write_world_report(meta, rows, out);
  }
  std::cout << "wrote " << path.string() << '\n';

  if (failures > 0) {
    std::cout << "verified " << worlds << " worlds (" << applicable
              << " with the bound applicable): " << failures << " FAILED\n";
    fail_verification(first_failure);
  }
  std::cout << "verified " << worlds << " worlds (" << applicable
            << " with the bound applicable): all identities and bounds hold\n";
}

// ------------------------------------------------------------ regress ----

void run_regress(const GlobalOpts& g, const std::string& report_path) {
  LadderReport report = read_ladder_report_file(report_path);
  std::vector<std::pair<double, double>> points;
  for (const LadderRow& row : report.rows) {
    if (row.has_delta) points.emplace_back(row.rho, row.delta_nats);
  }
  if (points.size() < 3) {
    fail_input("report has " + std::to_string(points.size()) +
               " rows with a loss delta; regression needs at least 3");
  }
  RegressionResult res = slope_t_test(points);
  std::cout << "slope=" << fixed6(shown(g, res.slope))
            << " intercept=" << fixed6(shown(g, res.intercept)) << " p=" << sig6(res.p_value)
            << " n=" << res.n << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entropy coefficient pipeline"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path)
      ->description("settings file: key = value lines under [section] headers");
  app.add_option("--threads", g.threads)
      ->description("worker thread count (this build always runs single-threaded)");
  app.add_flag("--bits", g.bits)
      ->description("print entropies and losses in bits instead of nats");

  auto bind = [&g](CLI::App* cmd, const std::string& flag, const std::string& key,
                   const std::string& help) {
    cmd->add_option(flag)->description(help)->each(
        [&g, key](const std::string& value) { g.flags[key] = value; });
  };
  bind(&app, "--seed", "seed", "master seed for every random choice (default 42)");
  bind(&app, "--out", "output.dir", "directory report files are written to");

  auto add_sub = [&](const std::string& name, const std::string& help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->fallthrough();
    return cmd;
  };
  auto bind_annotation = [&](CLI::App* cmd) {
    bind(cmd, "--annotation", "corpus.annotations", "annotated corpus path");
    bind(cmd, "--format", "corpus.format", "annotation format: tsv or conllu");
    bind(cmd, "--tag-column", "corpus.tag_column", "conllu tag column: upos or xpos");
  };
  auto bind_rho_opts = [&](CLI::App* cmd) {
    bind(cmd, "--order", "rho.order", "n-gram order of the entropy estimator");
    bind(cmd, "--train-fraction", "rho.train_fraction", "sentence fraction used for training");
    bind(cmd, "--heldout-fraction", "rho.heldout_fraction", "sentence fraction held out");
    bind(cmd, "--token-min-count", "rho.token_min_count", "tokens rarer than this become <unk>");
    bind(cmd, "--tag-min-count", "rho.tag_min_count", "tags rarer than this become <unk>");
  };
  auto bind_sgns_opts = [&](CLI::App* cmd) {
    bind(cmd, "--dim", "sgns.dim", "embedding dimension");
    bind(cmd, "--epochs", "sgns.epochs", "training epochs");
    bind(cmd, "--negatives", "sgns.negatives", "negative samples per pair");
    bind(cmd, "--window", "sgns.window", "context window half-width");
    bind(cmd, "--min-count", "sgns.min_count", "drop tokens rarer than this");
    bind(cmd, "--subsample", "sgns.subsample_t", "frequent-token subsampling threshold");
    bind(cmd, "--batch", "sgns.batch", "adam batch size");
    bind(cmd, "--optimizer", "sgns.optimizer", "sgd or adam");
    bind(cmd, "--lr", "sgns.lr", "initial learning rate");
    cmd->add_flag("--flip-subsample")
        ->description("treat the subsampling expression as a discard probability")
        ->each([&g](const std::string&) { g.flags["sgns.flip_subsample"] = "true"; });
  };
  auto bind_inlp_opts = [&](CLI::App* cmd) {
    bind(cmd, "--epsilon", "inlp.epsilon", "stop once the probe is within this of majority");
    bind(cmd, "--max-iters", "inlp.max_iters", "projection iteration cap (-1: dimension)");
  };

  // rho
  CLI::App* c_rho = add_sub("rho", "estimate the entropy coefficient of an annotated corpus");
  bind_annotation(c_rho);
  bind_rho_opts(c_rho);
  c_rho->callback([&] { run_rho(g); });

  // conflate
  CLI::App* c_conflate = add_sub("conflate", "merge the two least frequent tags, repeatedly");
  int conflate_steps = 1;
  bind_annotation(c_conflate);
  c_conflate->add_option("--steps", conflate_steps)->description("number of merge steps");
  c_conflate->callback([&] { run_conflate(g, conflate_steps); });

  // ladder
  CLI::App* c_ladder =
      add_sub("ladder", "full pipeline: conflation ladder, rho per step, removal deltas");
  bind_annotation(c_ladder);
  bind_rho_opts(c_ladder);
  bind_sgns_opts(c_ladder);
  bind_inlp_opts(c_ladder);
  bind(c_ladder, "--corpus", "corpus.path", "raw token stream the embeddings train on");
  bind(c_ladder, "--select-every", "ladder.select_every",
       "run the removal on every k-th ladder step (0: ceil(m/8))");
  c_ladder->callback([&] { run_ladder(g); });

  // sgns-train
  CLI::App* c_train = add_sub("sgns-train", "train skip-gram embeddings on a raw corpus");
  bind_sgns_opts(c_train);
  bind(c_train, "--corpus", "corpus.path", "raw token stream to train on");
  c_train->callback([&] { run_sgns_train(g); });

  // sgns-eval
  CLI::App* c_eval = add_sub("sgns-eval", "evaluate stored embeddings on a held-out stream");
  std::string eval_in, eval_out, eval_held, eval_objective = "softmax";
  bind_sgns_opts(c_eval);
  c_eval->add_option("--input-vectors", eval_in)
      ->description("input vector file from sgns-train")
      ->required();
  c_eval->add_option("--output-vectors", eval_out)
      ->description("output vector file from sgns-train")
      ->required();
  c_eval->add_option("--heldout", eval_held)->description("held-out token stream")->required();
  c_eval->add_option("--objective", eval_objective)->description("ns or softmax");
  c_eval->callback([&] { run_sgns_eval(g, eval_in, eval_out, eval_held, eval_objective); });

  // inlp
  CLI::App* c_inlp = add_sub("inlp", "iteratively project tag information out of embeddings");
  std::string inlp_in, inlp_out, inlp_probe_loss = "logistic";
  bind_annotation(c_inlp);
  bind_inlp_opts(c_inlp);
  c_inlp->add_option("--input-vectors", inlp_in)
      ->description("input vector file from sgns-train")
      ->required();
  c_inlp->add_option("--output-vectors", inlp_out)
      ->description("output vector file from sgns-train")
      ->required();
  c_inlp->add_option("--probe-loss", inlp_probe_loss)->description("logistic or hinge");
  c_inlp->callback([&] { run_inlp_cmd(g, inlp_in, inlp_out, inlp_probe_loss); });

  // delta-loss
  CLI::App* c_delta = add_sub("delta-loss", "loss increase after removing tag information");
  std::string delta_in, delta_out;
  bind_annotation(c_delta);
  bind_rho_opts(c_delta);
  bind_inlp_opts(c_delta);
  bind(c_delta, "--corpus", "corpus.path", "raw token stream for the refit and evaluation");
  c_delta->add_option("--input-vectors", delta_in)
      ->description("input vector file from sgns-train")
      ->required();
  c_delta->add_option("--output-vectors", delta_out)
      ->description("output vector file from sgns-train")
      ->required();
  c_delta->callback([&] { run_delta_loss(g, delta_in, delta_out); });

  // verify
  CLI::App* c_verify = add_sub("verify", "exact information-theory checks on seeded worlds");
  long long verify_worlds = 1000;
  std::size_t verify_alphabet = 16;
  int verify_decoder_iters = 8000;
  bool verify_inject = false;
  c_verify->add_option("--worlds", verify_worlds)->description("number of seeded worlds");
  c_verify->add_option("--max-alphabet", verify_alphabet)
      ->description("largest sentence alphabet");
  c_verify->add_option("--decoder-iters", verify_decoder_iters)
      ->description("gradient steps for the loss-change decoders");
  c_verify->add_flag("--inject-fault", verify_inject)
      ->description("append a broken-filter fixture that must fail");
  c_verify->callback(
      [&] { run_verify(g, verify_worlds, verify_alphabet, verify_decoder_iters, verify_inject); });

  // regress
  CLI::App* c_regress = add_sub("regress", "regress loss deltas on rho from a ladder report");
  std::string regress_path;
  c_regress->add_option("report", regress_path)->description("ladder report file")->required();
  c_regress->callback([&] { run_regress(g, regress_path); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 3;
  } catch (const entcoef::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
