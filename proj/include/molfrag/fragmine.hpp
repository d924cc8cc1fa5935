#ifndef MOLFRAG_FRAGMINE_HPP
#define MOLFRAG_FRAGMINE_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "molfrag/molgraph.hpp"
#include "molfrag/rng.hpp"

namespace molfrag {

struct VocabEntry {
  std::uint32_t token_id = 0;
  std::string canon;
  std::uint64_t frequency = 0;
  std::uint32_t atom_count = 0;
};

// Fragment vocabulary: single-atom seeds first (ordered by descending
// corpus frequency, then canon), then merged fragments in promotion order.
// Token ids are contiguous and stable.
class FragmentVocabulary {
 public:
  FragmentVocabulary() = default;
  static FragmentVocabulary from_entries(std::vector<VocabEntry> entries,
                                         bool truncated = false);

  const std::vector<VocabEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const VocabEntry* find(std::string_view canon) const;

  // Entries describing one atom, wherever they sit.
  std::size_t single_atom_count() const { return n_atom_; }

  // Set when mining ran out of mergeable pairs before reaching the target.
  bool truncated() const { return truncated_; }

  // Appends any single-atom fragments of m that are missing, with frequency
  // zero. Lets decompose() run on out-of-vocabulary atoms.
  void add_single_atoms(const Molecule& m);

  // TSV with a "token_id\tcanon_smiles\tfrequency" header.
  void save_tsv(std::ostream& out) const;
  void save_tsv_file(const std::string& path) const;
  static FragmentVocabulary load_tsv(std::istream& in);
  static FragmentVocabulary load_tsv_file(const std::string& path);

 private:
  void rebuild_index();

  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t n_atom_ = 0;
  bool truncated_ = false;
};

struct MineIteration {
  std::uint32_t iteration = 0;  // 1-based merge round
  std::string canon;
  std::uint64_t frequency = 0;
  std::uint64_t occurrences_merged = 0;
  std::uint64_t piece_count = 0;  // corpus-wide pieces after the round
  double elapsed_ms = 0.0;
};

struct MiningOptions {
  int threads = 1;
  std::function<void(const MineIteration&)> on_iteration;
};

// Grows a vocabulary to target_size entries: seeds with every distinct
// single-atom fragment, then repeatedly counts unions of adjacent piece
// pairs over the whole corpus, promotes the most frequent union (ties:
// fewer atoms, then lexicographic canon) and merges its non-overlapping
// occurrences in rank order. Throws EmptyCorpus. A target below the seed
// count returns the full seed set.
FragmentVocabulary mine_vocabulary(const std::vector<Molecule>& corpus,
                                   std::size_t target_size,
                                   const MiningOptions& options = {});

struct DecompPiece {
  std::string canon;
  std::vector<std::uint32_t> atoms;  // parent indices, ascending
};

struct Decomposition {
  std::string molecule_id;
  std::vector<DecompPiece> pieces;  // ordered by lowest canonical rank
};

// Greedy vocabulary-guided decomposition: starting from single atoms,
// repeatedly merges the adjacent-piece union with the highest vocabulary
// frequency (same tie rule as mining) until no union is in the vocabulary.
// The pieces partition the atoms exactly. Throws OutOfVocabularyAtom when
// an atom's single-atom fragment is missing.
Decomposition decompose(const Molecule& m, const FragmentVocabulary& vocab,
                        std::string molecule_id = "");

enum class TokenMode {
  Cot,        // every piece, lexicographically sorted
  Condition,  // deduplicated, filtered, 1-3 sampled at random
};

// Serialized fragment tokens: "<|" + canon + "|>" each. Condition mode
// drops duplicate canons, single-atom fragments and carbon-only
// non-conjugated fragments, then draws k fragments without replacement,
// k uniform on {1,2,3} capped at the survivor count.
std::vector<std::string> fragment_tokens(const Decomposition& d,
                                         TokenMode mode, Rng& rng);

std::string fragment_token(std::string_view canon);

// Canon inside "<|...|>", or nullopt when the affixes are missing.
std::optional<std::string> strip_fragment_token(std::string_view token);

// True when every atom is carbon, no bond is aromatic, and no two
// double/triple bonds are separated by exactly one single bond.
bool is_carbon_only_nonconjugated(const Molecule& m);

}  // namespace molfrag

#endif
