#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "molfrag/error.hpp"
#include "molfrag/evalmetrics.hpp"
#include "molfrag/fragmine.hpp"
#include "molfrag/molgraph.hpp"
#include "molfrag/rng.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace molfrag;

TEST_CASE("exact match compares canonical forms") {
  CHECK(exact_match({"OCC", "CCO"}));
  CHECK(exact_match({"c1ccccc1", "c1ccccc1"}));
  CHECK_FALSE(exact_match({"CCO", "CCN"}));
  CHECK_FALSE(exact_match({"not smiles", "CCO"}));
  CHECK_FALSE(exact_match({"", "CCO"}));
}

TEST_CASE("edit distance") {
  CHECK(levenshtein("kitten", "sitting") == 3);
  CHECK(levenshtein("", "abc") == 3);
  CHECK(levenshtein("abc", "") == 3);
  CHECK(levenshtein("", "") == 0);
  CHECK(levenshtein("same", "same") == 0);
  CHECK(levenshtein("flaw", "lawn") == 2);

  // Raw by default, canonical on request.
  CHECK(levenshtein(GenerationPair{"OCC", "CCO"}) == 2);
  CHECK(levenshtein(GenerationPair{"OCC", "CCO"}, true) == 0);
  // A side that does not parse stays as written.
  CHECK(levenshtein(GenerationPair{"zz", "CCO"}, true) == 3);
}

TEST_CASE("corpus BLEU pins") {
  CHECK(smiles_bleu({{"CCO", "CCO"}, {"c1ccccc1", "c1ccccc1"}}) ==
        doctest::Approx(1.0));
  CHECK(smiles_bleu({{"CCO", "NNN"}}) == doctest::Approx(0.0));
  CHECK(smiles_bleu({{"", "CCO"}}) == doctest::Approx(0.0));

  // One short pair: unigram and bigram precision 1, longer orders absent,
  // so only the brevity penalty bites.
  CHECK(smiles_bleu({{"ab", "abc"}}) == doctest::Approx(std::exp(-0.5)));

  CHECK_THROWS_AS(smiles_bleu({}), EmptyCorpus);
}

TEST_CASE("corpus BLEU agrees with the direct formula") {
  const std::vector<GenerationPair> pairs{
      {"CCO", "OCC"},
      {"c1ccccc1O", "c1ccccc1N"},
      {"CC(=O)O", "CC(=O)O"},
      {"NCCO", "OCCN"},
      {"C", "CCCC"},
  };
  std::vector<std::pair<std::string, std::string>> raw;
  for (const auto& p : pairs) raw.emplace_back(p.generated, p.reference);
  const double expected = oracles::oracle_bleu_chars(raw);
  CHECK(smiles_bleu(pairs) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected > 0.0);
  CHECK(expected < 1.0);
}

TEST_CASE("atom tokens change the BLEU n-grams") {
  const std::vector<GenerationPair> pairs{
      {"Clc1ccccc1", "c1ccccc1Cl"},
      {"CCO", "CCO"},
  };
  const double chars = smiles_bleu(pairs);
  const double atoms = smiles_bleu(pairs, true);
  CHECK(chars > 0.0);
  CHECK(atoms > 0.0);
  CHECK(chars != atoms);

  // Bracket atoms and two-letter halogens stay whole.
  CHECK(smiles_bleu({{"[NH4+]", "[NH4+]"}}, true) == doctest::Approx(1.0));
  CHECK(smiles_bleu({{"BrBr", "BrBr"}}, true) == doctest::Approx(1.0));
}

TEST_CASE("fingerprint similarity over pairs") {
  const std::vector<GenerationPair> pairs{
      {"CCO", "OCC"},       // identical molecule: similarity 1
      {"honk", "c1ccccc1"}  // invalid: scored zero, counted
  };
  const FtsResult keep = fingerprint_fts(pairs);
  CHECK(keep.mean == doctest::Approx(0.5));
  CHECK(keep.invalid_count == 1);

  const FtsResult drop = fingerprint_fts(pairs, true);
  CHECK(drop.mean == doctest::Approx(1.0));
  CHECK(drop.invalid_count == 1);

  CHECK(validity(pairs) == doctest::Approx(0.5));
  CHECK(validity({}) == doctest::Approx(0.0));
}

TEST_CASE("fragment satisfaction matches exhaustive search") {
  Rng rng(31);
  int mismatches = 0;
  int present_total = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const Molecule gen = testutil::random_molecule(rng, 14);
    const Molecule probe = testutil::random_molecule(rng, 5);
    std::vector<std::uint32_t> all(probe.atom_count());
    for (std::uint32_t i = 0; i < probe.atom_count(); ++i) all[i] = i;
    const std::string canon = fragment_canon(probe, all);

    const bool fast = has_fragment(gen, probe);
    const bool slow = oracles::oracle_has_fragment(gen, probe);
    if (fast != slow) ++mismatches;
    if (slow) ++present_total;

    const int count = fragment_satisfaction(gen, {canon});
    CHECK(count == (slow ? 1 : 0));
  }
  CHECK(mismatches == 0);
  // The generator's shared motifs make some probes land.
  CHECK(present_total > 0);
}

TEST_CASE("fragment satisfaction counts and skips garbage") {
  const Molecule hexanol = parse_smiles("CCCCCCO");
  const int count =
      fragment_satisfaction(hexanol, {"CCO", "CO", "N", "((bad"});
  CHECK(count == 2);
  CHECK(fragment_satisfaction(hexanol, {}) == 0);

  const Molecule naphthalene = parse_smiles("c1ccc2ccccc2c1");
  CHECK(has_fragment(naphthalene, parse_smiles("c1ccccc1")));
  CHECK_FALSE(has_fragment(parse_smiles("C1CCCCC1"),
                           parse_smiles("c1ccccc1")));
}

TEST_CASE("chain-of-thought consistency") {
  std::vector<VocabEntry> entries;
  entries.push_back({0, "C", 10, 1});
  entries.push_back({1, "O", 8, 1});
  entries.push_back({2, "CO", 5, 2});
  const FragmentVocabulary vocab = FragmentVocabulary::from_entries(entries);

  const Molecule ethanol = parse_smiles("CCO");
  // Decomposition pieces: CO and a lone carbon.
  const auto exact = cot_consistency({"CO", "C"}, ethanol, vocab);
  CHECK(exact.first == doctest::Approx(1.0));
  CHECK(exact.second == doctest::Approx(1.0));

  const auto partial = cot_consistency({"CO"}, ethanol, vocab);
  CHECK(partial.first == doctest::Approx(1.0));
  CHECK(partial.second == doctest::Approx(0.5));

  const auto noisy = cot_consistency({"CO", "CO", "N"}, ethanol, vocab);
  CHECK(noisy.first == doctest::Approx(1.0 / 3.0));
  CHECK(noisy.second == doctest::Approx(0.5));

  CHECK(cot_consistency({}, ethanol, vocab) ==
        std::pair<double, double>(0.0, 0.0));
  CHECK(cot_consistency({"N"}, ethanol, vocab) ==
        std::pair<double, double>(0.0, 0.0));
}

TEST_CASE("numeric extraction") {
  CHECK(extract_numeric("value is 2.31 kcal") == doctest::Approx(2.31));
  CHECK(extract_numeric("-0.0015") == doctest::Approx(-0.0015));
  CHECK(extract_numeric("weight: 132.115.") == doctest::Approx(132.115));
  CHECK(extract_numeric("1e-3 rest") == doctest::Approx(0.001));
  CHECK(extract_numeric("+.5") == doctest::Approx(0.5));
  CHECK_FALSE(extract_numeric("unknown").has_value());
  CHECK_FALSE(extract_numeric("").has_value());
}

TEST_CASE("property QA scoring") {
  const std::vector<std::string> answers{"The weight is 132.115.",
                                         "about 90.0", "no idea"};
  const std::vector<double> truths{132.115, 100.0, 50.0};
  const PropertyQaScore s =
      property_qa_score(answers, truths, PropertyKind::Weight);
  CHECK(s.valid_ratio == doctest::Approx(2.0 / 3.0));
  REQUIRE(s.mae.has_value());
  CHECK(*s.mae == doctest::Approx(5.0));
  REQUIRE(s.r2.has_value());

  // A number outside the sanctioned range is not a valid answer.
  const PropertyQaScore out_of_range =
      property_qa_score({"-7.0", "90"}, {100.0, 90.0}, PropertyKind::Weight);
  CHECK(out_of_range.valid_ratio == doctest::Approx(0.5));

  const PropertyQaScore none =
      property_qa_score({"a", "b"}, {1.0, 2.0}, PropertyKind::Weight);
  CHECK_FALSE(none.mae.has_value());
  CHECK_FALSE(none.r2.has_value());
  CHECK(none.valid_ratio == doctest::Approx(0.0));

  // Valid truths without variance leave R2 undefined.
  const PropertyQaScore flat = property_qa_score(
      {"100", "100"}, {100.0, 100.0}, PropertyKind::Weight);
  CHECK(*flat.mae == doctest::Approx(0.0));
  CHECK_FALSE(flat.r2.has_value());

  CHECK_THROWS_AS(property_qa_score({"1"}, {1.0, 2.0}, PropertyKind::Weight),
                  LengthMismatch);
  CHECK_THROWS_AS(property_qa_score({"1"}, {1.0}, PropertyKind::Weight),
                  EmptyCorpus);
}

TEST_CASE("high affinity rate uses an inclusive threshold") {
  CHECK(high_affinity_rate({-11.0, -9.0}) == doctest::Approx(0.5));
  CHECK(high_affinity_rate({-10.0, -10.0}) == doctest::Approx(1.0));
  CHECK(high_affinity_rate({}) == doctest::Approx(0.0));
  CHECK(high_affinity_rate({-6.0, -8.0}, -7.0) == doctest::Approx(0.5));
}

TEST_CASE("metric report shape and options") {
  const std::vector<GenerationPair> pairs{
      {"CCO", "OCC"}, {"CCN", "CCO"}, {"bad(", "CCO"}};
  const MetricReport report = evaluate_pairs(pairs);
  CHECK(report.count == 3);
  CHECK(report.invalid_count == 1);
  REQUIRE(report.metrics.size() == 5);
  CHECK(report.metrics[0].first == "BLEU");
  CHECK(report.metrics[1].first == "Exact");
  CHECK(report.metrics[2].first == "Levenshtein");
  CHECK(report.metrics[3].first == "Morgan FTS");
  CHECK(report.metrics[4].first == "Validity");
  CHECK(report.metrics[1].second == doctest::Approx(1.0 / 3.0));
  CHECK(report.metrics[4].second == doctest::Approx(2.0 / 3.0));

  std::ostringstream tsv;
  report.write_tsv(tsv);
  CHECK(tsv.str().find("BLEU\tExact\tLevenshtein\tMorgan FTS\tValidity\n") ==
        0);

  std::ostringstream js;
  report.write_json(js);
  const auto doc = nlohmann::ordered_json::parse(js.str());
  CHECK(doc["count"] == 3);
  CHECK(doc["invalid_count"] == 1);
  CHECK(doc["metrics"].contains("Morgan FTS"));

  EvalOptions canonical;
  canonical.levenshtein_canonical = true;
  const MetricReport canon_report = evaluate_pairs(pairs, canonical);
  CHECK(canon_report.metrics[2].second < report.metrics[2].second);

  CHECK_THROWS_AS(evaluate_pairs({}), EmptyCorpus);
}

TEST_CASE("pairs files") {
  std::istringstream in(
      "# header comment\n"
      "CCO\tOCC\n"
      "\n"
      "c1ccccc1\tc1ccccc1\n");
  const auto pairs = read_pairs(in);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].generated == "CCO");
  CHECK(pairs[0].reference == "OCC");

  std::istringstream bad("no tab here\n");
  CHECK_THROWS_AS(read_pairs(bad), FormatError);
}
