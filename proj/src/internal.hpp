#ifndef MOLFRAG_SRC_INTERNAL_HPP
#define MOLFRAG_SRC_INTERNAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "molfrag/molgraph.hpp"

namespace molfrag::internal {

// Hydrogens a bare (bracket-free) atom would receive. twice_sum counts
// half-bond units (single=2, aromatic=3); unit_sum counts connections
// (aromatic=1).
int implied_bare_hydrogens(int z, bool aromatic, int twice_sum, int unit_sum);

// Canonical ranks; with_hydrogens selects whether explicit H counts join
// the atom invariant (molecule identity) or not (fragment identity).
std::vector<std::uint32_t> ranks_flavored(const Molecule& m,
                                          bool with_hydrogens);

// Canonical SMILES text for either flavor. with_hydrogens controls both
// the rank invariant and whether bracket atoms carry H counts.
std::string write_flavored(const Molecule& m, bool with_hydrogens);

}  // namespace molfrag::internal

#endif
