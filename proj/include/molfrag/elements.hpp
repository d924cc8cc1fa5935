#ifndef MOLFRAG_ELEMENTS_HPP
#define MOLFRAG_ELEMENTS_HPP

#include <string>
#include <string_view>

namespace molfrag {

// Atomic number for a case-sensitive element symbol, 0 if unknown.
int atomic_number(std::string_view symbol);

// Symbol for an atomic number; empty for out-of-range values.
const std::string& element_symbol(int atomic_number);

// Conventional standard atomic weight; 0.0 for unknown elements.
double atomic_mass(int atomic_number);

// True for the SMILES organic subset (B C N O P S F Cl Br I) writable
// without brackets.
bool in_organic_subset(int atomic_number);

// True if the element may carry the aromatic flag (b c n o p s se as te).
bool aromatic_allowed(int atomic_number);

// Normal valences, used for implicit hydrogen assignment on bare atoms.
// Returns a pointer to a 0-terminated ascending list, or nullptr when the
// element has no entry in the valence table.
const int* normal_valences(int atomic_number);

// Largest allowed valence for an element with the given formal charge, or
// -1 when unconstrained. Charge shifts the lookup isoelectronically within
// the table (N+ checks like C, O- like F); shifts landing outside the table
// are unconstrained.
int max_valence(int atomic_number, int formal_charge);

}  // namespace molfrag

#endif
