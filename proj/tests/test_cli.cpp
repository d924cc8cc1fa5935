#include <sys/wait.h>

#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "molfrag/fragmine.hpp"
#include "molfrag/molgraph.hpp"
#include "molfrag/rng.hpp"
#include "testutil.hpp"

// MOLFRAG_CLI_PATH points at the built binary.

namespace {

int run_raw(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run(const std::string& args) {
  return run_raw(std::string(MOLFRAG_CLI_PATH) + " " + args);
}

std::vector<nlohmann::ordered_json> read_jsonl(const std::string& path) {
  std::vector<nlohmann::ordered_json> out;
  std::istringstream in(testutil::read_file(path));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(nlohmann::ordered_json::parse(line));
  return out;
}

}  // namespace

TEST_CASE("mine and tokenize round trip through files") {
  testutil::TempDir dir;
  molfrag::Rng rng(17);
  const auto mols = testutil::random_corpus(rng, 50, 12);
  const std::string corpus = dir.file("corpus.txt");
  testutil::write_corpus(corpus, mols);
  const std::string vocab_path = dir.file("vocab.tsv");

  CHECK(run("mine -i " + corpus + " -n 30 -o " + vocab_path + " 2>" +
            dir.file("mine.log")) == 0);
  const auto vocab = molfrag::FragmentVocabulary::load_tsv_file(vocab_path);
  CHECK(vocab.size() <= 30);
  CHECK(vocab.size() > 0);

  // The mining log is JSON lines with merge events.
  const std::string log = testutil::read_file(dir.file("mine.log"));
  CHECK(log.find("\"event\":\"corpus_loaded\"") != std::string::npos);
  CHECK(log.find("\"event\":\"merge\"") != std::string::npos);

  const std::string out = dir.file("tok.jsonl");
  CHECK(run("tokenize -i " + corpus + " --vocab " + vocab_path + " -o " +
            out + " 2>/dev/null") == 0);
  const auto rows = read_jsonl(out);
  REQUIRE(rows.size() == mols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i]["id"] == "m" + std::to_string(i));
    CHECK(rows[i]["smiles"] == molfrag::write_smiles(mols[i]));
    // Piece atom lists partition the molecule.
    std::size_t atom_total = 0;
    for (const auto& piece : rows[i]["pieces"])
      atom_total += piece["atoms"].size();
    CHECK(atom_total == mols[i].atom_count());
    CHECK(rows[i]["tokens"].size() == rows[i]["pieces"].size());
  }
}

TEST_CASE("tokenize reports bad lines in band and keeps going") {
  testutil::TempDir dir;
  const std::string corpus = dir.file("corpus.txt");
  testutil::write_file(corpus, "CCO\tok\nnot)(smiles\tbroken\nCC\tok2\n");
  const std::string vocab_path = dir.file("vocab.tsv");
  testutil::write_file(vocab_path,
                       "token_id\tcanon_smiles\tfrequency\n0\tC\t5\n1\tO\t3\n"
                       "2\tCO\t2\n3\tCCO\t1\n");

  const std::string out = dir.file("tok.jsonl");
  CHECK(run("tokenize -i " + corpus + " --vocab " + vocab_path + " -o " +
            out + " 2>/dev/null") == 0);
  const auto rows = read_jsonl(out);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].contains("tokens"));
  CHECK(rows[1].contains("error"));
  CHECK_FALSE(rows[1].contains("tokens"));
  CHECK(rows[2].contains("tokens"));

  // An out-of-vocabulary atom is an in-band record error too.
  testutil::write_file(corpus, "CCN\tamine\n");
  CHECK(run("tokenize -i " + corpus + " --vocab " + vocab_path + " -o " +
            out + " 2>/dev/null") == 0);
  const auto oov = read_jsonl(out);
  REQUIRE(oov.size() == 1);
  CHECK(oov[0].contains("error"));
}

TEST_CASE("exit codes distinguish usage and data failures") {
  testutil::TempDir dir;
  const std::string corpus = dir.file("corpus.txt");
  testutil::write_file(corpus, "CCO\nbroken((\n");

  // Usage errors.
  CHECK(run("2>/dev/null") == 1);
  CHECK(run("mine -i " + corpus + " 2>/dev/null") == 1);          // no -n
  CHECK(run("nosuchcommand 2>/dev/null") == 1);
  CHECK(run("mine -i " + corpus + " -n 5 --bogus 2>/dev/null") == 1);
  CHECK(run("build -i " + corpus + " --vocab x --task nope 2>/dev/null") ==
        1);
  CHECK(run("--help >/dev/null 2>&1") == 0);

  // Data errors.
  CHECK(run("mine -i " + corpus + " -n 5 -o /dev/null 2>/dev/null") == 2);
  CHECK(run("mine -i " + corpus + " -n 5 --max-bad-lines 1 -o /dev/null"
            " 2>/dev/null") == 0);
  CHECK(run("mine -i " + dir.file("missing.txt") +
            " -n 5 -o /dev/null 2>/dev/null") == 2);
  testutil::write_file(dir.file("empty.txt"), "");
  CHECK(run("mine -i " + dir.file("empty.txt") +
            " -n 5 -o /dev/null 2>/dev/null") == 2);
  testutil::write_file(dir.file("pairs.tsv"), "");
  CHECK(run("eval -i " + dir.file("pairs.tsv") +
            " -o /dev/null 2>/dev/null") == 2);
}

TEST_CASE("mine and build are byte-stable across threads and reruns") {
  testutil::TempDir dir;
  molfrag::Rng rng(23);
  const auto mols = testutil::random_corpus(rng, 120, 16);
  const std::string corpus = dir.file("corpus.txt");
  testutil::write_corpus(corpus, mols);

  const std::string v1 = dir.file("v1.tsv"), v8 = dir.file("v8.tsv"),
                    v1b = dir.file("v1b.tsv");
  CHECK(run("mine -i " + corpus + " -n 60 --threads 1 -o " + v1 +
            " 2>/dev/null") == 0);
  CHECK(run("mine -i " + corpus + " -n 60 --threads 8 -o " + v8 +
            " 2>/dev/null") == 0);
  CHECK(run("mine -i " + corpus + " -n 60 --threads 1 -o " + v1b +
            " 2>/dev/null") == 0);
  CHECK(testutil::read_file(v1) == testutil::read_file(v8));
  CHECK(testutil::read_file(v1) == testutil::read_file(v1b));

  std::string props;
  for (std::size_t i = 0; i < mols.size(); ++i) {
    const std::string id = "m" + std::to_string(i);
    props += id + "\tlogp\t" + std::to_string(0.1 * (i % 40) - 2.0) + "\n";
    props += id + "\tqed\t" + std::to_string(0.01 * (i % 90)) + "\n";
  }
  const std::string props_path = dir.file("props.tsv");
  testutil::write_file(props_path, props);

  const std::string b1 = dir.file("b1.jsonl"), b8 = dir.file("b8.jsonl"),
                    b1b = dir.file("b1b.jsonl");
  const std::string build_args = "build -i " + corpus + " --vocab " + v1 +
                                 " --task reverse_design --properties " +
                                 props_path + " --seed 7 ";
  CHECK(run(build_args + "--threads 1 -o " + b1 + " 2>/dev/null") == 0);
  CHECK(run(build_args + "--threads 8 -o " + b8 + " 2>/dev/null") == 0);
  CHECK(run(build_args + "--threads 1 -o " + b1b + " 2>/dev/null") == 0);
  CHECK(testutil::read_file(b1) == testutil::read_file(b8));
  CHECK(testutil::read_file(b1) == testutil::read_file(b1b));

  // The env variable is another way to set the seed.
  const std::string b_env = dir.file("benv.jsonl");
  CHECK(run_raw("env MOLFRAG_SEED=7 " + std::string(MOLFRAG_CLI_PATH) +
                " build -i " + corpus + " --vocab " + v1 +
                " --task reverse_design --properties " + props_path +
                " -o " + b_env + " 2>/dev/null") == 0);
  CHECK(testutil::read_file(b1) == testutil::read_file(b_env));

  // A different seed reshuffles the sampled conditions.
  const std::string b_other = dir.file("bother.jsonl");
  CHECK(run("build -i " + corpus + " --vocab " + v1 +
            " --task reverse_design --properties " + props_path +
            " --seed 8 --threads 1 -o " + b_other + " 2>/dev/null") == 0);
  CHECK(testutil::read_file(b1) != testutil::read_file(b_other));
}

TEST_CASE("eval on self pairs is perfect") {
  testutil::TempDir dir;
  const std::string pairs = dir.file("pairs.tsv");
  testutil::write_file(pairs, "CCO\tCCO\nc1ccccc1\tc1ccccc1\nCC(=O)O\tCC(=O)O\n");
  const std::string out = dir.file("report.tsv");
  const std::string js = dir.file("report.json");
  CHECK(run("eval -i " + pairs + " -o " + out + " --json " + js +
            " 2>/dev/null") == 0);

  const std::string tsv = testutil::read_file(out);
  CHECK(tsv.find("BLEU\tExact\tLevenshtein\tMorgan FTS\tValidity\n") == 0);
  const auto doc = nlohmann::ordered_json::parse(testutil::read_file(js));
  CHECK(doc["metrics"]["Exact"] == 1.0);
  CHECK(doc["metrics"]["Levenshtein"] == 0.0);
  CHECK(doc["metrics"]["Validity"] == 1.0);
  CHECK(doc["metrics"]["BLEU"] == 1.0);
}

TEST_CASE("bias of two copies of one encoding correlates exactly") {
  testutil::TempDir dir;
  const std::string feats = dir.file("feats.tsv");
  testutil::write_file(
      feats,
      "dim=3 count=4\n"
      "a\t1\t0\t0.5\nb\t0.2\t0.9\t0\nc\t0.4\t0.4\t0.4\nd\t0\t0.1\t1\n");
  const std::string out = dir.file("bias.tsv");
  CHECK(run("bias --features " + feats + " " + feats + " -o " + out +
            " 2>/dev/null") == 0);
  const std::string tsv = testutil::read_file(out);
  // Duplicate stems get a suffix; off-diagonal correlation is exactly 1.
  CHECK(tsv.find("encoding\tfeats\tfeats_2\n") == 0);
  CHECK(tsv.find("feats\t1.000000\t1.000000\n") != std::string::npos);

  CHECK(run("bias --features " + feats + " -o /dev/null 2>/dev/null") == 1);
}

TEST_CASE("fingerprint dump feeds the bias table") {
  testutil::TempDir dir;
  molfrag::Rng rng(29);
  const auto mols = testutil::random_corpus(rng, 20, 12);
  const std::string corpus = dir.file("corpus.txt");
  testutil::write_corpus(corpus, mols);

  const std::string fps = dir.file("fps.txt");
  CHECK(run("fingerprint -i " + corpus + " -o " + fps + " 2>/dev/null") ==
        0);

  // Matching ids let features join fingerprints in one table.
  std::string feats = "dim=4 count=" + std::to_string(mols.size()) + "\n";
  molfrag::Rng frng(31);
  for (std::size_t i = 0; i < mols.size(); ++i) {
    feats += "m" + std::to_string(i);
    for (int d = 0; d < 4; ++d)
      feats += "\t" + std::to_string(frng.uniform() - 0.5);
    feats += "\n";
  }
  const std::string feats_path = dir.file("feats.tsv");
  testutil::write_file(feats_path, feats);

  const std::string out = dir.file("bias.tsv");
  CHECK(run("bias --features " + feats_path + " --fingerprints " + fps +
            " -o " + out + " 2>/dev/null") == 0);
  CHECK(testutil::read_file(out).find("encoding\tfeats\tmorgan\n") == 0);

  // Mismatched molecule lists are refused.
  const std::string short_feats = dir.file("short.tsv");
  testutil::write_file(short_feats, "dim=2 count=2\nx\t1\t0\ny\t0\t1\n");
  CHECK(run("bias --features " + feats_path + " " + short_feats +
            " -o /dev/null 2>/dev/null") == 2);
}
