#ifndef MOLFRAG_MOLGRAPH_HPP
#define MOLFRAG_MOLGRAPH_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "molfrag/error.hpp"

namespace molfrag {

enum class BondOrder : std::uint8_t {
  Single = 1,
  Double = 2,
  Triple = 3,
  Aromatic = 4,
};

// Tetrahedral annotation as written (@ anticlockwise, @@ clockwise). Kept on
// the atom for callers; canonical output never re-emits it, since the tag's
// meaning is tied to the neighbor order of the original string.
enum class Chirality : std::uint8_t { None = 0, Anticlockwise = 1, Clockwise = 2 };

struct Atom {
  std::int16_t atomic_num = 6;
  std::int8_t formal_charge = 0;
  std::uint8_t explicit_h = 0;
  bool aromatic = false;
  bool in_ring = false;  // derived: lies on some cycle
  Chirality chirality = Chirality::None;
};

struct Bond {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  BondOrder order = BondOrder::Single;
};

class Molecule {
 public:
  Molecule() = default;

  // Validates indices, simple-graph shape and valences, then derives ring
  // membership. Throws ValenceError / SyntaxError on bad input.
  static Molecule from_parts(std::vector<Atom> atoms, std::vector<Bond> bonds);

  std::size_t atom_count() const { return atoms_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }
  const Atom& atom(std::size_t i) const { return atoms_[i]; }
  const Bond& bond(std::size_t i) const { return bonds_[i]; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }

  // (neighbor atom index, bond index) pairs in construction order.
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& neighbors(
      std::size_t i) const {
    return adj_[i];
  }

  // Bond index joining a and b, or -1.
  int bond_between(std::size_t a, std::size_t b) const;

 private:
  friend class SmilesParser;
  friend Molecule induced_subgraph(const Molecule&,
                                   std::span<const std::uint32_t>);
  // For subgraphs of an already validated molecule.
  static Molecule from_parts_unchecked(std::vector<Atom> atoms,
                                       std::vector<Bond> bonds);
  void build_adjacency();
  void derive_rings();

  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> adj_;
};

// Counters for annotations the parser accepts but does not model.
struct ParseStats {
  int ez_bonds_dropped = 0;
  int isotopes_dropped = 0;
  int atom_classes_dropped = 0;
};

// Parses a SMILES string: organic subset, bracket atoms with charge and
// explicit H, ring closures 1-99 (%nn), branches, aromatic lowercase taken
// as written, dot-separated components. Implicit hydrogens for bare atoms
// follow the normal valence table; aromatic bare atoms take their lowest
// valence minus bonds minus one. Throws SyntaxError (with byte position) or
// ValenceError.
Molecule parse_smiles(std::string_view text, ParseStats* stats = nullptr);

// Canonical atom ranks: a permutation of 0..n-1 from iterative neighborhood
// refinement over (degree, element, charge, aromatic, H count, ring flag,
// distance spectrum), individualizing the first tied class until discrete.
// Relabelings of one molecule induce the same canonical order.
std::vector<std::uint32_t> canonical_ranks(const Molecule& m);

// Deterministic canonical SMILES. Hydrogen counts and charges round-trip;
// stereo annotations are dropped. parse(write(m)) has the same canonical
// string as m.
std::string write_smiles(const Molecule& m);

// parse + write in one step.
std::string canonical_smiles(std::string_view text);

// True when text parses and every atom passes the valence check. Total:
// never throws, whatever the bytes.
bool is_valid_smiles(std::string_view text) noexcept;

// Sum of standard atomic weights plus 1.008 per hydrogen.
double molecular_weight(const Molecule& m);

// Vertex-induced subgraph: the listed atoms and every bond among them.
// Atom attributes are inherited; ring membership is re-derived locally.
Molecule induced_subgraph(const Molecule& m,
                          std::span<const std::uint32_t> atom_indices);

// Identity string for a fragment: canonical SMILES of the vertex-induced
// subgraph over element, charge, aromatic flag and bond orders only.
// Hydrogen counts never appear, so occurrences that differ only in
// hydrogens share one identity.
std::string fragment_canon(const Molecule& parent,
                           std::span<const std::uint32_t> atom_indices);

struct CorpusLine {
  std::string id;
  std::string smiles;
  std::size_t line_no = 0;  // 1-based
};

// Corpus text: one SMILES per line, optional tab-separated id as the second
// column (default id is the line number). '#' lines and blank lines are
// skipped. No parsing is attempted here.
std::vector<CorpusLine> read_corpus(std::istream& in);
std::vector<CorpusLine> read_corpus_file(const std::string& path);

}  // namespace molfrag

#endif
