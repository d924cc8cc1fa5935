#include <algorithm>
#include <cstdio>
#include <queue>
#include <tuple>

#include "internal.hpp"
#include "molfrag/elements.hpp"
#include "molfrag/molgraph.hpp"
#include "molfrag/rng.hpp"

namespace molfrag {

namespace {

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return Rng::mix(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

// Seed invariant. Degree leads so terminal atoms take the low ranks and
// chains start from their ends; element breaks ties among equal degrees.
struct SeedKey {
  std::uint32_t degree;
  std::int32_t z;
  std::int32_t charge;
  std::uint8_t aromatic;
  std::uint8_t in_ring;
  std::uint32_t hcount;
  std::uint64_t dist_hash;

  auto tie() const {
    return std::tie(degree, z, charge, aromatic, in_ring, hcount, dist_hash);
  }
  bool operator<(const SeedKey& o) const { return tie() < o.tie(); }
  bool operator==(const SeedKey& o) const { return tie() == o.tie(); }
};

// Multiset of (distance, element, charge, aromatic) over the atom's
// component, folded to one value. Strengthens refinement on near-regular
// graphs; never uses hydrogen counts, so both flavors may share it.
std::uint64_t distance_spectrum(const Molecule& m, std::uint32_t start,
                                std::vector<int>& dist,
                                std::vector<std::uint32_t>& queue) {
  std::fill(dist.begin(), dist.end(), -1);
  queue.clear();
  queue.push_back(start);
  dist[start] = 0;
  std::size_t head = 0;
  std::vector<std::uint64_t> items;
  while (head < queue.size()) {
    const std::uint32_t u = queue[head++];
    const Atom& a = m.atom(u);
    items.push_back((static_cast<std::uint64_t>(dist[u]) << 32) |
                    (static_cast<std::uint64_t>(a.atomic_num) << 16) |
                    (static_cast<std::uint64_t>(a.formal_charge + 128) << 8) |
                    (a.aromatic ? 1u : 0u));
    for (const auto& [v, b] : m.neighbors(u)) {
      (void)b;
      if (dist[v] == -1) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  std::sort(items.begin(), items.end());
  std::uint64_t h = 0x6d6f6c6672616721ULL;
  for (const std::uint64_t it : items) h = hash_combine(h, it);
  return h;
}

int refine(const Molecule& m, std::vector<std::uint32_t>& codes,
           int nclasses) {
  const std::size_t n = m.atom_count();
  std::vector<std::uint64_t> sig(n);
  std::vector<std::uint64_t> nbr_codes;
  std::vector<std::uint32_t> order(n);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) {
      nbr_codes.clear();
      for (const auto& [v, b] : m.neighbors(i))
        nbr_codes.push_back(
            (static_cast<std::uint64_t>(m.bond(b).order) << 32) | codes[v]);
      std::sort(nbr_codes.begin(), nbr_codes.end());
      std::uint64_t h = hash_combine(0x736d696c6573ULL, codes[i]);
      for (const std::uint64_t c : nbr_codes) h = hash_combine(h, c);
      sig[i] = h;
    }
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (codes[a] != codes[b]) return codes[a] < codes[b];
      return sig[a] < sig[b];
    });
    std::vector<std::uint32_t> next(n);
    int classes = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0) {
        const std::uint32_t p = order[k - 1], c = order[k];
        if (codes[p] != codes[c] || sig[p] != sig[c]) ++classes;
      }
      next[order[k]] = static_cast<std::uint32_t>(classes);
    }
    ++classes;
    if (classes == nclasses) return nclasses;
    codes = std::move(next);
    nclasses = classes;
    if (static_cast<std::size_t>(nclasses) == n) return nclasses;
  }
}

}  // namespace

namespace internal {

std::vector<std::uint32_t> ranks_flavored(const Molecule& m,
                                          bool with_hydrogens) {
  const std::size_t n = m.atom_count();
  if (n == 0) return {};

  std::vector<SeedKey> seeds(n);
  std::vector<int> dist(n);
  std::vector<std::uint32_t> bfs_queue;
  bfs_queue.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = m.atom(i);
    seeds[i] = SeedKey{
        static_cast<std::uint32_t>(m.neighbors(i).size()),
        a.atomic_num,
        a.formal_charge,
        static_cast<std::uint8_t>(a.aromatic ? 1 : 0),
        static_cast<std::uint8_t>(a.in_ring ? 1 : 0),
        with_hydrogens ? a.explicit_h : 0u,
        distance_spectrum(m, static_cast<std::uint32_t>(i), dist, bfs_queue),
    };
  }

  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return seeds[a] < seeds[b];
  });
  std::vector<std::uint32_t> codes(n);
  int nclasses = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && !(seeds[order[k - 1]] == seeds[order[k]])) ++nclasses;
    codes[order[k]] = static_cast<std::uint32_t>(nclasses);
  }
  ++nclasses;

  nclasses = refine(m, codes, nclasses);

  // Individualize the lowest tied class until the partition is discrete.
  // The member choice prefers the stereo annotation, then the input index;
  // for atoms the refinement could not separate this is a pick among
  // equivalent candidates and cannot change the written string.
  while (static_cast<std::size_t>(nclasses) < n) {
    std::uint32_t target_class = 0;
    std::uint32_t chosen = 0;
    bool found = false;
    std::vector<int> count(nclasses, 0);
    for (std::size_t i = 0; i < n; ++i) ++count[codes[i]];
    for (int c = 0; c < nclasses; ++c) {
      if (count[c] >= 2) {
        target_class = static_cast<std::uint32_t>(c);
        found = true;
        break;
      }
    }
    if (!found) break;
    std::uint32_t best_tag = 255;
    for (std::size_t i = 0; i < n; ++i) {
      if (codes[i] != target_class) continue;
      const auto tag = static_cast<std::uint32_t>(m.atom(i).chirality);
      if (tag < best_tag) {
        best_tag = tag;
        chosen = static_cast<std::uint32_t>(i);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      codes[i] = codes[i] * 2 + (i == chosen ? 0 : 1);
    }
    // Re-densify.
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return codes[a] < codes[b]; });
    std::vector<std::uint32_t> dense(n);
    int classes = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0 && codes[order[k - 1]] != codes[order[k]]) ++classes;
      dense[order[k]] = static_cast<std::uint32_t>(classes);
    }
    codes = std::move(dense);
    nclasses = refine(m, codes, classes + 1);
  }
  return codes;
}

}  // namespace internal

std::vector<std::uint32_t> canonical_ranks(const Molecule& m) {
  return internal::ranks_flavored(m, true);
}

namespace {

// Emission plan produced by one deterministic DFS in rank order.
struct WalkPlan {
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> children;
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> ring_open;
  std::vector<std::vector<std::uint32_t>> ring_close;  // bond indices
  std::vector<std::uint32_t> roots;  // component roots, output order
};

WalkPlan plan_walk(const Molecule& m, const std::vector<std::uint32_t>& ranks) {
  const std::size_t n = m.atom_count();
  WalkPlan plan;
  plan.children.resize(n);
  plan.ring_open.resize(n);
  plan.ring_close.resize(n);

  std::vector<std::uint32_t> by_rank(n);
  for (std::size_t i = 0; i < n; ++i) by_rank[ranks[i]] = static_cast<std::uint32_t>(i);

  // Preorder emission index; ~0u marks unvisited.
  std::vector<std::uint32_t> disc(n, ~0u);
  std::uint32_t disc_counter = 0;
  std::vector<char> bond_seen(m.bond_count(), 0);

  // Neighbor lists sorted by rank once.
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    nbrs[i] = m.neighbors(i);
    std::sort(nbrs[i].begin(), nbrs[i].end(),
              [&](const auto& x, const auto& y) { return ranks[x.first] < ranks[y.first]; });
  }

  struct Frame {
    std::uint32_t atom;
    std::uint32_t parent_bond;
    std::size_t next;
  };
  for (std::size_t r = 0; r < n; ++r) {
    const std::uint32_t root = by_rank[r];
    if (disc[root] != ~0u) continue;
    plan.roots.push_back(root);
    std::vector<Frame> stack;
    stack.push_back({root, ~0u, 0});
    disc[root] = disc_counter++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next >= nbrs[f.atom].size()) {
        stack.pop_back();
        continue;
      }
      const auto [v, b] = nbrs[f.atom][f.next++];
      if (b == f.parent_bond) continue;
      if (disc[v] == ~0u) {
        disc[v] = disc_counter++;
        plan.children[f.atom].emplace_back(v, b);
        stack.push_back({v, b, 0});
      } else if (!bond_seen[b]) {
        bond_seen[b] = 1;
        // The endpoint emitted first opens the digit, the later one closes
        // it; a cycle can also close through an earlier sibling subtree.
        const std::uint32_t opener = disc[v] < disc[f.atom] ? v : f.atom;
        const std::uint32_t closer = opener == v ? f.atom : v;
        plan.ring_open[opener].emplace_back(closer, b);
        plan.ring_close[closer].push_back(b);
      }
    }
  }
  return plan;
}

// Bond symbol between two atoms, empty when the parser default matches.
const char* bond_symbol(const Molecule& m, std::uint32_t bond) {
  const Bond& b = m.bond(bond);
  const bool both_aromatic = m.atom(b.a).aromatic && m.atom(b.b).aromatic;
  switch (b.order) {
    case BondOrder::Single: return both_aromatic ? "-" : "";
    case BondOrder::Double: return "=";
    case BondOrder::Triple: return "#";
    case BondOrder::Aromatic: return both_aromatic ? "" : ":";
  }
  return "";
}

void append_atom_token(const Molecule& m, std::uint32_t idx, bool with_h,
                       std::string& out) {
  const Atom& a = m.atom(idx);
  const std::string& sym = element_symbol(a.atomic_num);
  std::string body = sym;
  if (a.aromatic)
    for (char& c : body) c = static_cast<char>(std::tolower(c));

  bool bare = in_organic_subset(a.atomic_num) && a.formal_charge == 0 &&
              (!a.aromatic || (a.atomic_num == 5 || a.atomic_num == 6 ||
                               a.atomic_num == 7 || a.atomic_num == 8 ||
                               a.atomic_num == 15 || a.atomic_num == 16));
  if (bare && with_h) {
    int twice = 0, units = 0;
    for (const auto& [v, b] : m.neighbors(idx)) {
      (void)v;
      switch (m.bond(b).order) {
        case BondOrder::Single: twice += 2; units += 1; break;
        case BondOrder::Double: twice += 4; units += 2; break;
        case BondOrder::Triple: twice += 6; units += 3; break;
        case BondOrder::Aromatic: twice += 3; units += 1; break;
      }
    }
    bare = internal::implied_bare_hydrogens(a.atomic_num, a.aromatic, twice,
                                            units) == a.explicit_h;
  }
  if (bare) {
    out += body;
    return;
  }
  out += '[';
  out += body;
  if (with_h && a.explicit_h > 0) {
    out += 'H';
    if (a.explicit_h > 1) out += std::to_string(a.explicit_h);
  }
  if (a.formal_charge != 0) {
    out += a.formal_charge > 0 ? '+' : '-';
    const int mag = a.formal_charge > 0 ? a.formal_charge : -a.formal_charge;
    if (mag > 1) out += std::to_string(mag);
  }
  out += ']';
}

void append_digit(int digit, std::string& out) {
  if (digit < 10) {
    out += static_cast<char>('0' + digit);
  } else {
    out += '%';
    out += static_cast<char>('0' + digit / 10);
    out += static_cast<char>('0' + digit % 10);
  }
}

class Emitter {
 public:
  Emitter(const Molecule& m, const WalkPlan& plan, bool with_h)
      : m_(m), plan_(plan), with_h_(with_h), digit_of_bond_(m.bond_count(), 0) {
    for (int d = 1; d <= 99; ++d) free_digits_.push(d);
  }

  std::string run() {
    std::string out;
    for (std::size_t i = 0; i < plan_.roots.size(); ++i) {
      if (i > 0) out += '.';
      emit(plan_.roots[i], out);
    }
    return out;
  }

 private:
  void emit(std::uint32_t atom, std::string& out) {
    append_atom_token(m_, atom, with_h_, out);

    std::vector<int> to_free;
    for (const std::uint32_t b : plan_.ring_close[atom]) {
      append_digit(digit_of_bond_[b], out);
      to_free.push_back(digit_of_bond_[b]);
    }
    for (const auto& [partner, b] : plan_.ring_open[atom]) {
      (void)partner;
      if (free_digits_.empty()) throw Error("ring closure digits exhausted");
      const int d = free_digits_.top();
      free_digits_.pop();
      digit_of_bond_[b] = d;
      out += bond_symbol(m_, b);
      append_digit(d, out);
    }
    for (const int d : to_free) free_digits_.push(d);

    const auto& kids = plan_.children[atom];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const auto [child, bond] = kids[k];
      const bool last = (k + 1 == kids.size());
      if (!last) out += '(';
      out += bond_symbol(m_, bond);
      emit(child, out);
      if (!last) out += ')';
    }
  }

  const Molecule& m_;
  const WalkPlan& plan_;
  bool with_h_;
  std::vector<int> digit_of_bond_;
  std::priority_queue<int, std::vector<int>, std::greater<int>> free_digits_;
};

}  // namespace

namespace internal {

std::string write_flavored(const Molecule& m, bool with_hydrogens) {
  if (m.atom_count() == 0) return "";
  const auto ranks = ranks_flavored(m, with_hydrogens);
  const WalkPlan plan = plan_walk(m, ranks);
  return Emitter(m, plan, with_hydrogens).run();
}

}  // namespace internal

std::string write_smiles(const Molecule& m) {
  return internal::write_flavored(m, true);
}

std::string canonical_smiles(std::string_view text) {
  return write_smiles(parse_smiles(text));
}

std::string fragment_canon(const Molecule& parent,
                           std::span<const std::uint32_t> atom_indices) {
  return internal::write_flavored(induced_subgraph(parent, atom_indices),
                                  false);
}

}  // namespace molfrag
