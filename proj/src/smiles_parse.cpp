#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>

#include "molfrag/elements.hpp"
#include "molfrag/molgraph.hpp"

namespace molfrag {

namespace {

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string at_pos(std::string_view what, std::size_t pos) {
  std::ostringstream os;
  os << what << " at position " << pos;
  return os.str();
}

// Bond order sum in half-bond units (single=2, aromatic=3), for the
// aliphatic implicit-H rule.
int twice_order(BondOrder o) {
  switch (o) {
    case BondOrder::Single: return 2;
    case BondOrder::Double: return 4;
    case BondOrder::Triple: return 6;
    case BondOrder::Aromatic: return 3;
  }
  return 2;
}

// Integer connection count for valence checking (aromatic counts 1).
int unit_order(BondOrder o) {
  switch (o) {
    case BondOrder::Single: return 1;
    case BondOrder::Double: return 2;
    case BondOrder::Triple: return 3;
    case BondOrder::Aromatic: return 1;
  }
  return 1;
}

}  // namespace

int Molecule::bond_between(std::size_t a, std::size_t b) const {
  for (const auto& [nbr, bond] : adj_[a])
    if (nbr == b) return static_cast<int>(bond);
  return -1;
}

void Molecule::build_adjacency() {
  adj_.assign(atoms_.size(), {});
  for (std::size_t i = 0; i < bonds_.size(); ++i) {
    adj_[bonds_[i].a].emplace_back(bonds_[i].b, static_cast<std::uint32_t>(i));
    adj_[bonds_[i].b].emplace_back(bonds_[i].a, static_cast<std::uint32_t>(i));
  }
}

// Ring membership: an atom is in a ring iff it touches a non-bridge edge.
// Iterative DFS with low-links.
void Molecule::derive_rings() {
  const std::size_t n = atoms_.size();
  for (auto& a : atoms_) a.in_ring = false;
  if (n == 0) return;

  std::vector<int> disc(n, -1), low(n, 0);
  std::vector<std::uint32_t> parent_bond(n, ~0u);
  int timer = 0;

  struct Frame {
    std::uint32_t atom;
    std::size_t next_edge;
  };
  std::vector<Frame> stack;
  for (std::uint32_t root = 0; root < n; ++root) {
    if (disc[root] != -1) continue;
    stack.push_back({root, 0});
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto& nbrs = adj_[f.atom];
      if (f.next_edge < nbrs.size()) {
        const auto [v, b] = nbrs[f.next_edge++];
        if (b == parent_bond[f.atom]) continue;
        if (disc[v] == -1) {
          disc[v] = low[v] = timer++;
          parent_bond[v] = b;
          stack.push_back({v, 0});
        } else {
          if (low[f.atom] > disc[v]) low[f.atom] = disc[v];
        }
      } else {
        stack.pop_back();
        if (!stack.empty()) {
          const std::uint32_t u = stack.back().atom;
          if (low[u] > low[f.atom]) low[u] = low[f.atom];
          // Non-bridge tree edge: part of a cycle.
          if (low[f.atom] <= disc[u]) {
            atoms_[u].in_ring = true;
            atoms_[f.atom].in_ring = true;
          }
        }
      }
    }
  }
  // Back edges always sit on a cycle.
  for (std::size_t i = 0; i < bonds_.size(); ++i) {
    const auto& bd = bonds_[i];
    const bool is_tree =
        parent_bond[bd.a] == i || parent_bond[bd.b] == i;
    if (!is_tree) {
      atoms_[bd.a].in_ring = true;
      atoms_[bd.b].in_ring = true;
    }
  }
}

namespace internal {

int implied_bare_hydrogens(int z, bool aromatic, int twice_sum, int unit_sum) {
  const int* valences = normal_valences(z);
  if (valences == nullptr) return 0;
  if (aromatic) {
    // Lowest normal valence, one slot reserved for the ring system. Gives
    // benzene carbons one H and thiophene sulfur zero without any
    // aromaticity perception.
    const int h = valences[0] - unit_sum - 1;
    return h > 0 ? h : 0;
  }
  const int need = (twice_sum + 1) / 2;
  for (const int* v = valences; *v != 0; ++v)
    if (*v >= need) return *v - need;
  return 0;
}

}  // namespace internal

class SmilesParser {
 public:
  SmilesParser(std::string_view text, ParseStats* stats)
      : text_(text), stats_(stats) {}

  Molecule run() {
    trim();
    if (text_.empty()) throw SyntaxError("empty SMILES");
    while (pos_ < text_.size()) step();
    finish_checks();
    mol_.build_adjacency();
    assign_hydrogens();
    check_valences();
    mol_.derive_rings();
    return std::move(mol_);
  }

 private:
  void trim() {
    std::size_t b = 0, e = text_.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text_[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text_[e - 1]))) --e;
    text_ = text_.substr(b, e - b);
  }

  void step() {
    const char c = text_[pos_];
    if (is_upper(c)) {
      parse_organic_atom();
    } else if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' ||
               c == 's') {
      add_atom(make_aromatic_organic(c), true);
      ++pos_;
    } else if (c == '[') {
      parse_bracket_atom();
    } else if (is_digit(c) || c == '%') {
      parse_ring_closure();
    } else if (c == '-' || c == '=' || c == '#' || c == ':') {
      set_pending_bond(c);
      ++pos_;
    } else if (c == '/' || c == '\\') {
      // Directional bonds are accepted as plain single bonds.
      set_pending_bond('-');
      if (stats_) ++stats_->ez_bonds_dropped;
      ++pos_;
    } else if (c == '(') {
      if (prev_ < 0) throw SyntaxError(at_pos("branch before any atom", pos_));
      if (pending_order_ != 0)
        throw SyntaxError(at_pos("bond before branch open", pos_));
      branch_stack_.push_back(prev_);
      ++pos_;
    } else if (c == ')') {
      if (branch_stack_.empty())
        throw SyntaxError(at_pos("unmatched ')'", pos_));
      if (pending_order_ != 0)
        throw SyntaxError(at_pos("dangling bond before ')'", pos_));
      if (prev_ == branch_stack_.back())
        throw SyntaxError(at_pos("empty branch", pos_));
      prev_ = branch_stack_.back();
      branch_stack_.pop_back();
      ++pos_;
    } else if (c == '.') {
      if (!branch_stack_.empty())
        throw SyntaxError(at_pos("dot inside branch", pos_));
      if (pending_order_ != 0)
        throw SyntaxError(at_pos("bond before dot", pos_));
      if (prev_ < 0) throw SyntaxError(at_pos("dot before any atom", pos_));
      prev_ = -1;
      ++pos_;
    } else {
      throw SyntaxError(at_pos(std::string("unexpected character '") + c + "'",
                               pos_));
    }
  }

  Atom make_aromatic_organic(char c) {
    Atom a;
    const char upper = static_cast<char>(std::toupper(c));
    a.atomic_num = static_cast<std::int16_t>(
        atomic_number(std::string_view(&upper, 1)));
    a.aromatic = true;
    return a;
  }

  void parse_organic_atom() {
    // Two-letter organic-subset symbols first.
    if (pos_ + 1 < text_.size()) {
      const std::string_view two = text_.substr(pos_, 2);
      if (two == "Cl" || two == "Br") {
        Atom a;
        a.atomic_num = static_cast<std::int16_t>(atomic_number(two));
        add_atom(a, true);
        pos_ += 2;
        return;
      }
    }
    const char c = text_[pos_];
    const int z = atomic_number(std::string_view(&c, 1));
    if (!in_organic_subset(z))
      throw SyntaxError(at_pos(std::string("element '") + c +
                                   "' requires brackets",
                               pos_));
    Atom a;
    a.atomic_num = static_cast<std::int16_t>(z);
    add_atom(a, true);
    ++pos_;
  }

  void parse_bracket_atom() {
    const std::size_t open = pos_;
    ++pos_;  // '['
    Atom a;

    // Optional isotope digits, accepted but not modeled.
    bool saw_isotope = false;
    while (pos_ < text_.size() && is_digit(text_[pos_])) {
      saw_isotope = true;
      ++pos_;
    }
    if (saw_isotope && stats_) ++stats_->isotopes_dropped;

    if (pos_ >= text_.size())
      throw SyntaxError(at_pos("unterminated bracket atom", open));

    // Element symbol, aromatic if written lowercase.
    if (is_lower(text_[pos_])) {
      static constexpr std::string_view kTwo[] = {"se", "as", "te", "si"};
      std::string_view sym;
      if (pos_ + 1 < text_.size()) {
        const std::string_view two = text_.substr(pos_, 2);
        for (const auto& t : kTwo)
          if (two == t) sym = two;
      }
      if (sym.empty()) sym = text_.substr(pos_, 1);
      std::string upper(sym);
      upper[0] = static_cast<char>(std::toupper(upper[0]));
      const int z = atomic_number(upper);
      if (z == 0 || !aromatic_allowed(z))
        throw SyntaxError(at_pos("unknown aromatic symbol", pos_));
      a.atomic_num = static_cast<std::int16_t>(z);
      a.aromatic = true;
      pos_ += sym.size();
    } else if (is_upper(text_[pos_])) {
      std::string_view sym = text_.substr(pos_, 1);
      if (pos_ + 1 < text_.size() && is_lower(text_[pos_ + 1])) {
        const std::string_view two = text_.substr(pos_, 2);
        if (atomic_number(two) != 0) sym = two;
      }
      const int z = atomic_number(sym);
      if (z == 0) throw SyntaxError(at_pos("unknown element symbol", pos_));
      a.atomic_num = static_cast<std::int16_t>(z);
      pos_ += sym.size();
    } else {
      throw SyntaxError(at_pos("expected element symbol", pos_));
    }

    // Optional tetrahedral tag.
    if (pos_ < text_.size() && text_[pos_] == '@') {
      ++pos_;
      if (pos_ < text_.size() && text_[pos_] == '@') {
        a.chirality = Chirality::Clockwise;
        ++pos_;
      } else {
        a.chirality = Chirality::Anticlockwise;
      }
    }

    // Optional hydrogen count.
    if (pos_ < text_.size() && text_[pos_] == 'H') {
      ++pos_;
      int h = 1;
      if (pos_ < text_.size() && is_digit(text_[pos_])) {
        h = 0;
        while (pos_ < text_.size() && is_digit(text_[pos_])) {
          h = h * 10 + (text_[pos_] - '0');
          if (h > 99) throw SyntaxError(at_pos("hydrogen count too large", pos_));
          ++pos_;
        }
      }
      a.explicit_h = static_cast<std::uint8_t>(h);
    }

    // Optional charge.
    if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
      const char sign = text_[pos_];
      int count = 0;
      while (pos_ < text_.size() && text_[pos_] == sign) {
        ++count;
        ++pos_;
      }
      if (count == 1 && pos_ < text_.size() && is_digit(text_[pos_])) {
        count = 0;
        while (pos_ < text_.size() && is_digit(text_[pos_])) {
          count = count * 10 + (text_[pos_] - '0');
          if (count > 15) throw SyntaxError(at_pos("charge too large", pos_));
          ++pos_;
        }
      }
      if (count > 15) throw SyntaxError(at_pos("charge too large", open));
      a.formal_charge = static_cast<std::int8_t>(sign == '+' ? count : -count);
    }

    // Optional atom class, accepted but not modeled.
    if (pos_ < text_.size() && text_[pos_] == ':') {
      ++pos_;
      if (pos_ >= text_.size() || !is_digit(text_[pos_]))
        throw SyntaxError(at_pos("expected atom class digits", pos_));
      while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
      if (stats_) ++stats_->atom_classes_dropped;
    }

    if (pos_ >= text_.size() || text_[pos_] != ']')
      throw SyntaxError(at_pos("expected ']'", pos_));
    ++pos_;
    add_atom(a, false);
  }

  void set_pending_bond(char c) {
    if (pending_order_ != 0)
      throw SyntaxError(at_pos("two bond symbols in a row", pos_));
    if (prev_ < 0) throw SyntaxError(at_pos("bond before any atom", pos_));
    switch (c) {
      case '-': pending_order_ = 1; break;
      case '=': pending_order_ = 2; break;
      case '#': pending_order_ = 3; break;
      case ':': pending_order_ = 4; break;
    }
    pending_pos_ = pos_;
  }

  void parse_ring_closure() {
    int digit;
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() || !is_digit(text_[pos_ + 1]) ||
          !is_digit(text_[pos_ + 2]))
        throw SyntaxError(at_pos("expected two digits after '%'", pos_));
      digit = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      digit = text_[pos_] - '0';
      ++pos_;
    }
    if (prev_ < 0)
      throw SyntaxError(at_pos("ring closure before any atom", pos_ - 1));

    RingSlot& slot = rings_[static_cast<std::size_t>(digit)];
    if (slot.atom < 0) {
      slot.atom = prev_;
      slot.order = pending_order_;
      slot.pos = pos_ - 1;
      pending_order_ = 0;
      return;
    }
    if (slot.atom == prev_)
      throw SyntaxError(at_pos("ring closure to the same atom", pos_ - 1));
    int order = 0;
    if (slot.order != 0 && pending_order_ != 0 && slot.order != pending_order_)
      throw SyntaxError(at_pos("mismatched ring bond orders", pos_ - 1));
    order = slot.order != 0 ? slot.order : pending_order_;
    add_bond(static_cast<std::uint32_t>(slot.atom),
             static_cast<std::uint32_t>(prev_), order, pos_ - 1);
    slot = RingSlot{};
    pending_order_ = 0;
  }

  void add_atom(const Atom& a, bool bare) {
    mol_.atoms_.push_back(a);
    bare_.push_back(bare);
    nbrs_.emplace_back();
    const int idx = static_cast<int>(mol_.atoms_.size()) - 1;
    if (prev_ >= 0)
      add_bond(static_cast<std::uint32_t>(prev_),
               static_cast<std::uint32_t>(idx), pending_order_, pos_);
    pending_order_ = 0;
    prev_ = idx;
  }

  void add_bond(std::uint32_t a, std::uint32_t b, int order, std::size_t pos) {
    for (const std::uint32_t nbr : nbrs_[a])
      if (nbr == b)
        throw SyntaxError(at_pos("duplicate bond between atoms", pos));
    nbrs_[a].push_back(b);
    nbrs_[b].push_back(a);
    Bond bd;
    bd.a = a;
    bd.b = b;
    if (order == 0)
      bd.order = mol_.atoms_[a].aromatic && mol_.atoms_[b].aromatic
                     ? BondOrder::Aromatic
                     : BondOrder::Single;
    else
      bd.order = static_cast<BondOrder>(order);
    mol_.bonds_.push_back(bd);
  }

  void finish_checks() {
    if (pending_order_ != 0)
      throw SyntaxError(at_pos("dangling bond at end", pending_pos_));
    if (!branch_stack_.empty())
      throw SyntaxError("unclosed branch");
    if (prev_ < 0) throw SyntaxError("trailing dot");
    for (std::size_t d = 0; d < rings_.size(); ++d)
      if (rings_[d].atom >= 0) {
        std::ostringstream os;
        os << "unclosed ring bond " << d;
        throw SyntaxError(os.str());
      }
  }

  void assign_hydrogens() {
    for (std::size_t i = 0; i < mol_.atoms_.size(); ++i) {
      if (!bare_[i]) continue;
      int twice = 0, units = 0;
      for (const auto& [nbr, b] : mol_.adj_[i]) {
        (void)nbr;
        twice += twice_order(mol_.bonds_[b].order);
        units += unit_order(mol_.bonds_[b].order);
      }
      Atom& a = mol_.atoms_[i];
      a.explicit_h = static_cast<std::uint8_t>(internal::implied_bare_hydrogens(
          a.atomic_num, a.aromatic, twice, units));
    }
  }

  void check_valences() {
    for (std::size_t i = 0; i < mol_.atoms_.size(); ++i) {
      const Atom& a = mol_.atoms_[i];
      const int cap = max_valence(a.atomic_num, a.formal_charge);
      if (cap < 0) continue;
      int units = 0;
      for (const auto& [nbr, b] : mol_.adj_[i]) {
        (void)nbr;
        units += unit_order(mol_.bonds_[b].order);
      }
      if (units + a.explicit_h > cap) {
        std::ostringstream os;
        os << "valence " << units + a.explicit_h << " exceeds " << cap
           << " for " << element_symbol(a.atomic_num) << " at atom " << i;
        throw ValenceError(os.str());
      }
    }
  }

  struct RingSlot {
    int atom = -1;
    int order = 0;
    std::size_t pos = 0;
  };

  std::string_view text_;
  ParseStats* stats_;
  Molecule mol_;
  std::vector<bool> bare_;
  std::vector<std::vector<std::uint32_t>> nbrs_;
  std::size_t pos_ = 0;
  int prev_ = -1;
  int pending_order_ = 0;
  std::size_t pending_pos_ = 0;
  std::vector<int> branch_stack_;
  std::array<RingSlot, 100> rings_{};
};

Molecule parse_smiles(std::string_view text, ParseStats* stats) {
  return SmilesParser(text, stats).run();
}

Molecule Molecule::from_parts(std::vector<Atom> atoms, std::vector<Bond> bonds) {
  Molecule m;
  m.atoms_ = std::move(atoms);
  m.bonds_ = std::move(bonds);
  const std::size_t n = m.atoms_.size();
  for (std::size_t i = 0; i < m.bonds_.size(); ++i) {
    const Bond& b = m.bonds_[i];
    if (b.a >= n || b.b >= n) throw SyntaxError("bond index out of range");
    if (b.a == b.b) throw SyntaxError("self bond");
    for (std::size_t j = 0; j < i; ++j) {
      const Bond& o = m.bonds_[j];
      if ((o.a == b.a && o.b == b.b) || (o.a == b.b && o.b == b.a))
        throw SyntaxError("duplicate bond");
    }
  }
  m.build_adjacency();
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = m.atoms_[i];
    const int cap = max_valence(a.atomic_num, a.formal_charge);
    if (cap < 0) continue;
    int units = 0;
    for (const auto& [nbr, bi] : m.adj_[i]) {
      (void)nbr;
      units += unit_order(m.bonds_[bi].order);
    }
    if (units + a.explicit_h > cap) {
      std::ostringstream os;
      os << "valence " << units + a.explicit_h << " exceeds " << cap
         << " for " << element_symbol(a.atomic_num) << " at atom " << i;
      throw ValenceError(os.str());
    }
  }
  m.derive_rings();
  return m;
}

bool is_valid_smiles(std::string_view text) noexcept {
  try {
    parse_smiles(text);
    return true;
  } catch (const Error&) {
    return false;
  }
}

double molecular_weight(const Molecule& m) {
  double w = 0.0;
  for (const Atom& a : m.atoms())
    w += atomic_mass(a.atomic_num) + 1.008 * a.explicit_h;
  return w;
}

Molecule Molecule::from_parts_unchecked(std::vector<Atom> atoms,
                                        std::vector<Bond> bonds) {
  Molecule m;
  m.atoms_ = std::move(atoms);
  m.bonds_ = std::move(bonds);
  m.build_adjacency();
  m.derive_rings();
  return m;
}

Molecule induced_subgraph(const Molecule& m,
                          std::span<const std::uint32_t> atom_indices) {
  std::vector<int> local(m.atom_count(), -1);
  std::vector<Atom> atoms;
  atoms.reserve(atom_indices.size());
  for (std::size_t i = 0; i < atom_indices.size(); ++i) {
    const std::uint32_t idx = atom_indices[i];
    if (idx >= m.atom_count()) throw SyntaxError("atom index out of range");
    if (local[idx] != -1) throw SyntaxError("duplicate atom index");
    local[idx] = static_cast<int>(i);
    atoms.push_back(m.atom(idx));
  }
  std::vector<Bond> bonds;
  for (const Bond& b : m.bonds()) {
    if (local[b.a] != -1 && local[b.b] != -1) {
      Bond nb;
      nb.a = static_cast<std::uint32_t>(local[b.a]);
      nb.b = static_cast<std::uint32_t>(local[b.b]);
      nb.order = b.order;
      bonds.push_back(nb);
    }
  }
  // Attributes and bonds come from a validated parent; only adjacency and
  // ring flags need rebuilding.
  return Molecule::from_parts_unchecked(std::move(atoms), std::move(bonds));
}

std::vector<CorpusLine> read_corpus(std::istream& in) {
  std::vector<CorpusLine> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    if (line[b] == '#') continue;
    CorpusLine cl;
    cl.line_no = line_no;
    const std::size_t tab = line.find('\t', b);
    if (tab == std::string::npos) {
      cl.smiles = line.substr(b);
      cl.id = std::to_string(line_no);
    } else {
      cl.smiles = line.substr(b, tab - b);
      std::size_t ib = line.find_first_not_of(" \t", tab);
      cl.id = ib == std::string::npos ? std::to_string(line_no)
                                      : line.substr(ib);
    }
    while (!cl.smiles.empty() && (cl.smiles.back() == ' ' || cl.smiles.back() == '\t'))
      cl.smiles.pop_back();
    while (!cl.id.empty() && (cl.id.back() == ' ' || cl.id.back() == '\t'))
      cl.id.pop_back();
    out.push_back(std::move(cl));
  }
  return out;
}

std::vector<CorpusLine> read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  return read_corpus(in);
}

}  // namespace molfrag
