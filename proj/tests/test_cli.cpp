#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <catch2/catch_amalgamated.hpp>

#include "entcoef/conflation.hpp"
#include "entcoef/corpus.hpp"
#include "entcoef/inlp.hpp"
#include "entcoef/report.hpp"
#include "fixture_gen.hpp"

// These tests drive the installed binary the way a shell user would, so they
// cover argument wiring, exit codes and report files rather than numerics
// (the library tests own those).

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  RunResult r;
  std::string cmd = std::string(ENTCOEF_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// Fresh per-test scratch directory under the ctest working directory.
fs::path scratch(const std::string& name) {
  fs::path dir = fs::current_path() / "cli_scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

// Small seeded corpus pair shared by the pipeline tests: 16 types, 4 tags.
struct TinyFixture {
  fs::path raw;
  fs::path ann;
};

TinyFixture tiny_fixture(const fs::path& dir) {
  fixture::CorpusSpec spec;
  spec.topics = 1;
  spec.tags = 4;
  spec.types_per_cell = 4;
  spec.tokens = 4000;
  spec.seed = 7;
  auto toks = fixture::generate_corpus(spec);
  TinyFixture fx{dir / "raw.txt", dir / "ann.tsv"};
  fixture::write_raw(toks, fx.raw.string());
  fixture::write_annotation(toks, spec.sentence_len, fixture::Tagging::generated,
                            fx.ann.string());
  return fx;
}

std::string q(const fs::path& path) { return "\"" + path.string() + "\""; }

}  // namespace

TEST_CASE("cli rho reports one for a token-copy annotation") {
  fs::path dir = scratch("rho_copy");
  fixture::CorpusSpec spec;
  spec.topics = 1;
  spec.tags = 4;
  spec.types_per_cell = 4;
  spec.tokens = 2000;
  spec.seed = 3;
  auto toks = fixture::generate_corpus(spec);
  fs::path ann = dir / "copy.tsv";
  fixture::write_annotation(toks, spec.sentence_len, fixture::Tagging::token_copy,
                            ann.string());

  RunResult r = run_cli("rho --annotation " + q(ann) + " --out " + q(dir));
  CAPTURE(r.out);
  CHECK(r.code == 0);
  CHECK(r.out.find("rho=1.000000") != std::string::npos);

  std::string report = slurp(dir / "rho_report.tsv");
  CHECK(report.find("# seed = 42") != std::string::npos);
  CHECK(report.find("# config_hash = ") != std::string::npos);
  CHECK(report.find("rho\th_tags\th_tokens") != std::string::npos);
}

TEST_CASE("cli missing inputs exit with the config code") {
  fs::path dir = scratch("missing");
  RunResult no_file = run_cli("rho --annotation " + q(dir / "nope.tsv"));
  CAPTURE(no_file.out);
  CHECK(no_file.code == 3);

  RunResult no_config = run_cli("--config " + q(dir / "nope.ini") + " rho");
  CHECK(no_config.code == 3);

  RunResult no_path = run_cli("rho");
  CAPTURE(no_path.out);
  CHECK(no_path.code == 3);
  CHECK(no_path.out.find("annotations") != std::string::npos);
}

TEST_CASE("cli rejects unknown config keys") {
  fs::path dir = scratch("badkey");
  write_text(dir / "bad.ini", "[rho]\nordr = 3\n");
  TinyFixture fx = tiny_fixture(dir);
  RunResult r = run_cli("--config " + q(dir / "bad.ini") + " rho --annotation " + q(fx.ann));
  CAPTURE(r.out);
  CHECK(r.code == 3);
  CHECK(r.out.find("rho.ordr") != std::string::npos);
}

TEST_CASE("cli flags override config file settings") {
  fs::path dir = scratch("override");
  TinyFixture fx = tiny_fixture(dir);
  write_text(dir / "pipe.ini",
             "[corpus]\nannotations = " + fx.ann.string() + "\n[rho]\norder = 2\n");

  // The same file drives both runs; the flag must win over [rho] order.
  RunResult from_file = run_cli("--config " + q(dir / "pipe.ini") + " rho --out " +
                                q(dir / "o1"));
  RunResult overridden = run_cli("--config " + q(dir / "pipe.ini") + " rho --order 3 --out " +
                                 q(dir / "o2"));
  CAPTURE(from_file.out, overridden.out);
  CHECK(from_file.code == 0);
  CHECK(overridden.code == 0);
  std::string h1 = slurp(dir / "o1" / "rho_report.tsv");
  std::string h2 = slurp(dir / "o2" / "rho_report.tsv");
  CHECK(h1 != h2);
}

TEST_CASE("cli verify passes clean worlds and flags injected faults") {
  fs::path dir = scratch("verify");
  RunResult ok = run_cli("verify --worlds 25 --out " + q(dir / "ok"));
  CAPTURE(ok.out);
  CHECK(ok.code == 0);
  CHECK(ok.out.find("verified 25 worlds") != std::string::npos);
  CHECK(fs::exists(dir / "ok" / "verify_report.tsv"));

  RunResult fault = run_cli("verify --worlds 10 --inject-fault --out " + q(dir / "bad"));
  CAPTURE(fault.out);
  CHECK(fault.code == 1);
  CHECK(fault.out.find("injected broken-filter fixture") != std::string::npos);

  RunResult empty = run_cli("verify --worlds 0 --out " + q(dir / "none"));
  CAPTURE(empty.out);
  CHECK(empty.code == 3);
  CHECK(empty.out.find("nothing to verify") != std::string::npos);
}

TEST_CASE("cli conflate writes a reparseable annotation") {
  fs::path dir = scratch("conflate");
  TinyFixture fx = tiny_fixture(dir);
  RunResult r = run_cli("conflate --steps 1 --annotation " + q(fx.ann) + " --out " + q(dir));
  CAPTURE(r.out);
  CHECK(r.code == 0);

  entcoef::AnnotatedCorpus before =
      entcoef::parse_corpus_file(fx.ann.string(), entcoef::CorpusFormat::tsv);
  entcoef::AnnotatedCorpus after = entcoef::parse_corpus_file(
      (dir / "conflated.tsv").string(), entcoef::CorpusFormat::tsv);
  CHECK(entcoef::tag_histogram(after).distinct() ==
        entcoef::tag_histogram(before).distinct() - 1);
  CHECK(after.token_count() == before.token_count());
}

TEST_CASE("cli sgns inlp and delta-loss chain through vector files") {
  fs::path dir = scratch("chain");
  TinyFixture fx = tiny_fixture(dir);
  std::string sgns_flags = " --dim 8 --epochs 2 --min-count 1 --window 2 --subsample 1.0";

  RunResult train = run_cli("sgns-train --corpus " + q(fx.raw) + sgns_flags + " --out " + q(dir));
  CAPTURE(train.out);
  REQUIRE(train.code == 0);
  fs::path vin = dir / "vectors.in.tsv";
  fs::path vout = dir / "vectors.out.tsv";
  REQUIRE(fs::exists(vin));
  REQUIRE(fs::exists(vout));

  RunResult eval = run_cli("sgns-eval --input-vectors " + q(vin) + " --output-vectors " +
                           q(vout) + " --heldout " + q(fx.raw) + sgns_flags + " --out " +
                           q(dir));
  CAPTURE(eval.out);
  CHECK(eval.code == 0);
  CHECK(fs::exists(dir / "eval_report.tsv"));

  RunResult inlp = run_cli("inlp --annotation " + q(fx.ann) + " --input-vectors " + q(vin) +
                           " --output-vectors " + q(vout) + " --out " + q(dir));
  CAPTURE(inlp.out);
  CHECK(inlp.code == 0);
  std::ifstream proj_in(dir / "projection.tsv");
  Eigen::MatrixXd p = entcoef::load_projection(proj_in);
  CHECK((p * p - p).cwiseAbs().maxCoeff() <= 1e-8);

  RunResult delta = run_cli("delta-loss --annotation " + q(fx.ann) + " --corpus " + q(fx.raw) +
                            " --input-vectors " + q(vin) + " --output-vectors " + q(vout) +
                            " --out " + q(dir));
  CAPTURE(delta.out);
  CHECK(delta.code == 0);
  entcoef::LadderReport rep =
      entcoef::read_ladder_report_file((dir / "delta_report.tsv").string());
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].has_delta);
}

TEST_CASE("cli ladder reruns are byte-identical") {
  fs::path dir = scratch("ladder_det");
  TinyFixture fx = tiny_fixture(dir);
  std::string cmd = "ladder --annotation " + q(fx.ann) + " --corpus " + q(fx.raw) +
                    " --dim 8 --epochs 2 --min-count 1 --window 2 --subsample 1.0" +
                    " --epsilon 0.05 --seed 42 --out ";

  RunResult first = run_cli(cmd + q(dir / "a"));
  CAPTURE(first.out);
  REQUIRE(first.code == 0);
  RunResult second = run_cli(cmd + q(dir / "b"));
  REQUIRE(second.code == 0);

  CHECK(slurp(dir / "a" / "ladder_report.tsv") == slurp(dir / "b" / "ladder_report.tsv"));
  CHECK(slurp(dir / "a" / "ladder_plot.tsv") == slurp(dir / "b" / "ladder_plot.tsv"));

  entcoef::LadderReport rep =
      entcoef::read_ladder_report_file((dir / "a" / "ladder_report.tsv").string());
  CHECK(rep.rows.size() == 4);
}

TEST_CASE("cli refuses to overwrite a report from a different config") {
  fs::path dir = scratch("hash_mix");
  TinyFixture fx = tiny_fixture(dir);
  RunResult first = run_cli("rho --annotation " + q(fx.ann) + " --out " + q(dir));
  REQUIRE(first.code == 0);

  // Same settings may overwrite; a different estimator order must not.
  RunResult same = run_cli("rho --annotation " + q(fx.ann) + " --out " + q(dir));
  CHECK(same.code == 0);
  RunResult mixed = run_cli("rho --annotation " + q(fx.ann) + " --order 2 --out " + q(dir));
  CAPTURE(mixed.out);
  CHECK(mixed.code == 3);
  CHECK(mixed.out.find("refusing to mix") != std::string::npos);
}

TEST_CASE("cli regress validates its report argument") {
  fs::path dir = scratch("regress");

  entcoef::LadderReport two;
  two.meta.seed = 42;
  two.meta.config_hash = "0123456789abcdef";
  for (std::size_t id = 0; id < 2; ++id) {
    entcoef::LadderRow row;
    row.annotation_id = id;
    row.rho = 0.5 - 0.1 * static_cast<double>(id);
    row.has_delta = true;
    row.iterations = 1;
    row.final_acc = 0.5;
    row.majority = 0.5;
    row.delta_nats = 0.2 - 0.05 * static_cast<double>(id);
    row.inlp_converged = true;
    two.rows.push_back(row);
  }
  {
    std::ofstream out(dir / "two_rows.tsv");
    entcoef::write_ladder_report(two, out);
  }
  RunResult short_run = run_cli("regress " + q(dir / "two_rows.tsv"));
  CAPTURE(short_run.out);
  CHECK(short_run.code == 2);
  CHECK(short_run.out.find("at least 3") != std::string::npos);

  write_text(dir / "mangled.tsv", "annotation_id\trho\n0\t0.5\n");
  RunResult mangled = run_cli("regress " + q(dir / "mangled.tsv"));
  CAPTURE(mangled.out);
  CHECK(mangled.code == 2);

  // Metadata is required so hashes can be checked before rows are trusted.
  write_text(dir / "no_meta.tsv", std::string(entcoef::kLadderHeader) +
                                      "\n0\t0.5\t1\t0.5\t0.5\t0.2\tok\n");
  RunResult no_meta = run_cli("regress " + q(dir / "no_meta.tsv"));
  CAPTURE(no_meta.out);
  CHECK(no_meta.code == 2);
}

TEST_CASE("cli help exits cleanly and bad flags do not") {
  RunResult help = run_cli("--help");
  CHECK(help.code == 0);
  CHECK(help.out.find("ladder") != std::string::npos);

  RunResult bad = run_cli("rho --no-such-flag");
  CHECK(bad.code == 3);

  RunResult no_sub = run_cli("");
  CHECK(no_sub.code == 3);
}
