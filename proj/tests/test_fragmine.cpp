#include <algorithm>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "molfrag/error.hpp"
#include "molfrag/fragmine.hpp"
#include "molfrag/molgraph.hpp"
#include "molfrag/rng.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace molfrag;

namespace {

FragmentVocabulary hexitol_vocab() {
  std::vector<VocabEntry> entries;
  const auto add = [&](const char* canon, std::uint64_t freq,
                       std::uint32_t atoms) {
    entries.push_back({static_cast<std::uint32_t>(entries.size()), canon,
                       freq, atoms});
  };
  add("C", 200, 1);
  add("O", 150, 1);
  add("CO", 100, 2);
  add("CCO", 90, 3);
  add("OCCO", 80, 4);
  return FragmentVocabulary::from_entries(entries);
}

bool exact_partition(const Decomposition& d, std::size_t atom_count) {
  std::vector<std::uint32_t> all;
  for (const auto& p : d.pieces) {
    if (!std::is_sorted(p.atoms.begin(), p.atoms.end())) return false;
    all.insert(all.end(), p.atoms.begin(), p.atoms.end());
  }
  std::sort(all.begin(), all.end());
  if (all.size() != atom_count) return false;
  for (std::uint32_t i = 0; i < atom_count; ++i)
    if (all[i] != i) return false;
  return true;
}

}  // namespace

TEST_CASE("mining a single hexitol follows the merge schedule") {
  const std::vector<Molecule> corpus{parse_smiles("OCC(O)C(O)C(O)C(O)CO")};
  std::vector<MineIteration> log;
  MiningOptions opts;
  opts.on_iteration = [&](const MineIteration& it) { log.push_back(it); };
  const FragmentVocabulary vocab = mine_vocabulary(corpus, 5, opts);

  REQUIRE(log.size() == 3);
  CHECK(log[0].iteration == 1);
  CHECK(log[0].canon == "CO");
  CHECK(log[0].frequency == 6);
  CHECK(log[0].occurrences_merged == 6);
  CHECK(log[1].canon == "OCCO");
  CHECK(log[1].frequency == 5);
  CHECK(log[1].occurrences_merged == 3);
  CHECK(log[2].canon == "OCC(O)C(O)CO");
  CHECK(log[2].frequency == 2);
  CHECK(log[2].occurrences_merged == 1);

  // Seeds sorted by descending frequency: 6 carbons against 6 oxygens tie,
  // broken by canon.
  REQUIRE(vocab.size() == 5);
  CHECK(vocab.entries()[0].canon == "C");
  CHECK(vocab.entries()[0].frequency == 6);
  CHECK(vocab.entries()[1].canon == "O");
  CHECK(vocab.entries()[2].canon == "CO");
  CHECK(vocab.single_atom_count() == 2);
  CHECK_FALSE(vocab.truncated());
}

TEST_CASE("mining matches the brute-force reference on random corpora") {
  Rng rng(2024);
  for (int trial = 0; trial < 6; ++trial) {
    const auto corpus = testutil::random_corpus(rng, 20 + rng.below(20), 12);

    std::vector<std::string> merges;
    MiningOptions opts;
    opts.threads = trial % 2 == 0 ? 1 : 4;
    opts.on_iteration = [&](const MineIteration& it) {
      merges.push_back(it.canon);
    };
    const std::size_t target = 10 + rng.below(30);
    const FragmentVocabulary vocab = mine_vocabulary(corpus, target, opts);
    const oracles::MineResult expected = oracles::oracle_mine(corpus, target);

    CHECK(merges == expected.merge_sequence);
    CHECK(vocab.truncated() == expected.truncated);
    REQUIRE(vocab.size() == expected.entries.size());
    for (std::size_t i = 0; i < expected.entries.size(); ++i) {
      CHECK(vocab.entries()[i].canon == expected.entries[i].first);
      CHECK(vocab.entries()[i].frequency == expected.entries[i].second);
      CHECK(vocab.entries()[i].token_id == i);
    }
  }
}

TEST_CASE("mining edge cases") {
  CHECK_THROWS_AS(mine_vocabulary({}, 10), EmptyCorpus);

  // Target below the seed count still returns every seed.
  const std::vector<Molecule> corpus{parse_smiles("CNO")};
  const FragmentVocabulary tiny = mine_vocabulary(corpus, 1);
  CHECK(tiny.size() == 3);

  // Unreachable target sets the truncated flag.
  const FragmentVocabulary capped = mine_vocabulary(corpus, 50);
  CHECK(capped.truncated());
  CHECK(capped.size() < 50);
}

TEST_CASE("decompose partitions hexitol into three glycol units") {
  const Molecule hexitol = parse_smiles("OCC(O)C(O)C(O)C(O)CO");
  const Decomposition d = decompose(hexitol, hexitol_vocab(), "hexitol");
  CHECK(d.molecule_id == "hexitol");
  REQUIRE(d.pieces.size() == 3);
  for (const auto& p : d.pieces) {
    CHECK(p.canon == "OCCO");
    CHECK(p.atoms.size() == 4);
  }
  CHECK(exact_partition(d, hexitol.atom_count()));
}

TEST_CASE("decompose covers every atom exactly once") {
  Rng rng(99);
  const auto corpus = testutil::random_corpus(rng, 60, 18);
  const FragmentVocabulary vocab = mine_vocabulary(corpus, 40);
  for (const auto& m : corpus) {
    const Decomposition d = decompose(m, vocab);
    CHECK(exact_partition(d, m.atom_count()));
    // Every piece canon actually sits in the vocabulary.
    for (const auto& p : d.pieces) CHECK(vocab.find(p.canon) != nullptr);
  }
}

TEST_CASE("decompose rejects out-of-vocabulary atoms") {
  const Molecule amine = parse_smiles("CCN");
  FragmentVocabulary vocab = hexitol_vocab();
  CHECK_THROWS_AS(decompose(amine, vocab), OutOfVocabularyAtom);

  vocab.add_single_atoms(amine);
  const Decomposition d = decompose(amine, vocab);
  CHECK(exact_partition(d, amine.atom_count()));
  const VocabEntry* n_entry = vocab.find("N");
  REQUIRE(n_entry != nullptr);
  CHECK(n_entry->frequency == 0);
}

TEST_CASE("vocabulary TSV round trip and format errors") {
  Rng rng(5);
  const auto corpus = testutil::random_corpus(rng, 25, 10);
  const FragmentVocabulary vocab = mine_vocabulary(corpus, 20);

  std::ostringstream out;
  vocab.save_tsv(out);
  std::istringstream in(out.str());
  const FragmentVocabulary loaded = FragmentVocabulary::load_tsv(in);
  REQUIRE(loaded.size() == vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    CHECK(loaded.entries()[i].token_id == vocab.entries()[i].token_id);
    CHECK(loaded.entries()[i].canon == vocab.entries()[i].canon);
    CHECK(loaded.entries()[i].frequency == vocab.entries()[i].frequency);
    CHECK(loaded.entries()[i].atom_count == vocab.entries()[i].atom_count);
  }
  CHECK(loaded.single_atom_count() == vocab.single_atom_count());

  const auto loads = [](const std::string& text) {
    std::istringstream s(text);
    return FragmentVocabulary::load_tsv(s);
  };
  CHECK_THROWS_AS(loads("wrong\theader\there\n0\tC\t1\n"), FormatError);
  CHECK_THROWS_AS(
      loads("token_id\tcanon_smiles\tfrequency\n1\tC\t5\n"), FormatError);
  CHECK_THROWS_AS(
      loads("token_id\tcanon_smiles\tfrequency\n0\tC\t5\n1\tC\t4\n"),
      FormatError);
  CHECK_THROWS_AS(
      loads("token_id\tcanon_smiles\tfrequency\n0\tC\n"), FormatError);
  CHECK_THROWS_AS(
      loads("token_id\tcanon_smiles\tfrequency\n0\tC\tmany\n"), FormatError);
}

TEST_CASE("fragment token affixes") {
  CHECK(fragment_token("OCCO") == "<|OCCO|>");
  CHECK(strip_fragment_token("<|OCCO|>") == std::string("OCCO"));
  CHECK_FALSE(strip_fragment_token("OCCO").has_value());
  CHECK_FALSE(strip_fragment_token("<|OCCO").has_value());
  CHECK_FALSE(strip_fragment_token("OCCO|>").has_value());
}

TEST_CASE("carbon-only non-conjugated filter") {
  CHECK(is_carbon_only_nonconjugated(parse_smiles("C")));
  CHECK(is_carbon_only_nonconjugated(parse_smiles("CCC")));
  CHECK(is_carbon_only_nonconjugated(parse_smiles("C=C")));
  CHECK(is_carbon_only_nonconjugated(parse_smiles("C=CCC=C")));
  CHECK_FALSE(is_carbon_only_nonconjugated(parse_smiles("C=CC=C")));
  CHECK_FALSE(is_carbon_only_nonconjugated(parse_smiles("c1ccccc1")));
  CHECK_FALSE(is_carbon_only_nonconjugated(parse_smiles("CC(C)=O")));
  CHECK_FALSE(is_carbon_only_nonconjugated(parse_smiles("C#CC#C")));
  CHECK_FALSE(is_carbon_only_nonconjugated(parse_smiles("CCO")));
}

TEST_CASE("fragment tokens in both modes") {
  const Molecule hexitol = parse_smiles("OCC(O)C(O)C(O)C(O)CO");
  const Decomposition d = decompose(hexitol, hexitol_vocab());

  Rng rng(3);
  const auto cot = fragment_tokens(d, TokenMode::Cot, rng);
  CHECK(cot == std::vector<std::string>{"<|OCCO|>", "<|OCCO|>", "<|OCCO|>"});

  Rng rng2(3);
  const auto cond = fragment_tokens(d, TokenMode::Condition, rng2);
  CHECK(cond == std::vector<std::string>{"<|OCCO|>"});

  // Same seed, same draw.
  Rng rng3(3);
  CHECK(fragment_tokens(d, TokenMode::Condition, rng3) == cond);
}

TEST_CASE("condition mode filters bare atoms and plain carbon chains") {
  // Water decomposes to one single-atom piece; nothing survives the
  // condition filter.
  FragmentVocabulary vocab = hexitol_vocab();
  const Molecule water = parse_smiles("O");
  const Decomposition d = decompose(water, vocab);
  Rng rng(1);
  CHECK(fragment_tokens(d, TokenMode::Condition, rng).empty());
  Rng rng_cot(1);
  CHECK(fragment_tokens(d, TokenMode::Cot, rng_cot) ==
        std::vector<std::string>{"<|O|>"});

  // A pure alkane fragment is dropped too. The merge chain needs the
  // two-carbon intermediate: pieces only ever merge pairwise.
  std::vector<VocabEntry> entries;
  entries.push_back({0, "C", 10, 1});
  entries.push_back({1, "O", 8, 1});
  entries.push_back({2, "CC", 6, 2});
  entries.push_back({3, "CCC", 5, 3});
  const FragmentVocabulary alkane_vocab =
      FragmentVocabulary::from_entries(entries);
  const Molecule propane = parse_smiles("CCC");
  const Decomposition pd = decompose(propane, alkane_vocab);
  REQUIRE(pd.pieces.size() == 1);
  CHECK(pd.pieces[0].canon == "CCC");
  Rng rng4(1);
  CHECK(fragment_tokens(pd, TokenMode::Condition, rng4).empty());
}

TEST_CASE("condition mode draws one to three distinct fragments") {
  Rng rng(123);
  const auto corpus = testutil::random_corpus(rng, 40, 16);
  const FragmentVocabulary vocab = mine_vocabulary(corpus, 30);
  for (const auto& m : corpus) {
    const Decomposition d = decompose(m, vocab);
    Rng record_rng = Rng(9).fork(7);
    const auto tokens = fragment_tokens(d, TokenMode::Condition, record_rng);
    CHECK(tokens.size() <= 3);
    std::set<std::string> unique(tokens.begin(), tokens.end());
    CHECK(unique.size() == tokens.size());
    for (const auto& t : tokens) {
      const auto canon = strip_fragment_token(t);
      REQUIRE(canon.has_value());
      const Molecule frag = parse_smiles(*canon);
      CHECK(frag.atom_count() >= 2);
      CHECK_FALSE(is_carbon_only_nonconjugated(frag));
    }
  }
}
