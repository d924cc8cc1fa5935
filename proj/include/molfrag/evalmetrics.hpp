#ifndef MOLFRAG_EVALMETRICS_HPP
#define MOLFRAG_EVALMETRICS_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "molfrag/dataset.hpp"
#include "molfrag/fragmine.hpp"
#include "molfrag/molgraph.hpp"

namespace molfrag {

struct GenerationPair {
  std::string generated;  // model output, possibly invalid
  std::string reference;
};

// True iff generated parses and both sides share one canonical form.
bool exact_match(const GenerationPair& p);

// Unit-cost edit distance.
std::size_t levenshtein(std::string_view a, std::string_view b);

// Distance between the pair's strings as written. With canonicalize,
// each side that parses is replaced by its canonical form first.
std::size_t levenshtein(const GenerationPair& p, bool canonicalize = false);

// Corpus BLEU, 1..4-gram with uniform weights and brevity penalty, over
// character tokens (atom_tokens switches to SMILES atom tokens: bracket
// atoms, Cl/Br and %nn ring closures kept whole). Orders absent from
// every candidate are dropped with the weights renormalized. Throws
// EmptyCorpus.
double smiles_bleu(const std::vector<GenerationPair>& pairs,
                   bool atom_tokens = false);

struct FtsResult {
  double mean = 0.0;
  std::size_t invalid_count = 0;
};

// Mean Morgan-fingerprint Tanimoto over pairs. Invalid generated strings
// contribute zero and are counted; with drop_invalid they are left out of
// the mean instead.
FtsResult fingerprint_fts(const std::vector<GenerationPair>& pairs,
                          bool drop_invalid = false);

// Fraction of generated strings that are valid SMILES.
double validity(const std::vector<GenerationPair>& pairs);

// Number of required fragments present in gen as connected vertex-induced
// subgraphs, matching element, charge and aromatic flag per atom and bond
// order per bond (hydrogen counts ignored, as in fragment identity).
int fragment_satisfaction(const Molecule& gen,
                          const std::vector<std::string>& required_canons);

// True when the fragment occurs in target under the matching rules above.
bool has_fragment(const Molecule& target, const Molecule& fragment);

// Multiset precision and recall of a generated fragment chain against the
// decomposition of the final molecule. An empty chain scores (0, 0).
std::pair<double, double> cot_consistency(
    const std::vector<std::string>& chain_canons, const Molecule& final_mol,
    const FragmentVocabulary& vocab);

// First signed decimal number in the text, scientific notation included.
std::optional<double> extract_numeric(std::string_view text);

struct PropertyQaScore {
  std::optional<double> mae;
  std::optional<double> r2;  // absent when valid truths have no variance
  double valid_ratio = 0.0;
};

// An answer is valid when it contains a number inside the property's
// sanctioned range; MAE and R2 are computed over valid answers only.
// Throws LengthMismatch on unequal lengths, EmptyCorpus below two pairs.
PropertyQaScore property_qa_score(const std::vector<std::string>& answers,
                                  const std::vector<double>& truths,
                                  PropertyKind kind);

// Fraction of scores at or below the threshold. Empty input scores 0.
double high_affinity_rate(const std::vector<double>& scores,
                          double threshold = -10.0);

struct EvalOptions {
  bool bleu_atom_tokens = false;
  bool levenshtein_canonical = false;
  bool fts_drop_invalid = false;
};

struct MetricReport {
  std::size_t count = 0;
  std::size_t invalid_count = 0;
  // Fixed order: BLEU, Exact, Levenshtein, Morgan FTS, Validity.
  std::vector<std::pair<std::string, double>> metrics;

  void write_tsv(std::ostream& out) const;
  void write_json(std::ostream& out) const;
};

MetricReport evaluate_pairs(const std::vector<GenerationPair>& pairs,
                            const EvalOptions& options = {});

// Pairs file: one generated<TAB>reference per line, '#' comments and
// blank lines skipped.
std::vector<GenerationPair> read_pairs(std::istream& in);
std::vector<GenerationPair> read_pairs_file(const std::string& path);

}  // namespace molfrag

#endif
