#include <algorithm>
#include <chrono>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "molfrag/fragmine.hpp"
#include "molfrag/parallel.hpp"

namespace molfrag {

namespace {

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return a < b ? (static_cast<std::uint64_t>(a) << 32) | b
               : (static_cast<std::uint64_t>(b) << 32) | a;
}

// One molecule's merge state. Piece ids grow monotonically and are never
// reused, so a (low id, high id) key names an adjacent pair for good.
struct Piece {
  std::vector<std::uint32_t> atoms;  // sorted by canonical rank
  bool alive = true;
};

struct MolState {
  const Molecule* mol = nullptr;
  std::vector<std::uint32_t> ranks;
  std::vector<std::uint32_t> piece_of;
  std::vector<Piece> pieces;
  // Current adjacent pairs with their interned union canon.
  std::vector<std::pair<std::uint64_t, std::uint32_t>> pairs;

  void init(const Molecule& m) {
    mol = &m;
    ranks = canonical_ranks(m);
    const std::size_t n = m.atom_count();
    piece_of.resize(n);
    pieces.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      piece_of[i] = static_cast<std::uint32_t>(i);
      pieces[i].atoms = {static_cast<std::uint32_t>(i)};
    }
  }

  std::vector<std::uint32_t> union_atoms(std::uint32_t p, std::uint32_t q) const {
    std::vector<std::uint32_t> out;
    const auto& pa = pieces[p].atoms;
    const auto& qa = pieces[q].atoms;
    out.reserve(pa.size() + qa.size());
    std::merge(pa.begin(), pa.end(), qa.begin(), qa.end(),
               std::back_inserter(out),
               [&](std::uint32_t x, std::uint32_t y) { return ranks[x] < ranks[y]; });
    return out;
  }

  std::string union_canon(std::uint32_t p, std::uint32_t q) const {
    const auto atoms = union_atoms(p, q);
    return fragment_canon(*mol, atoms);
  }

  // Unique adjacent piece pairs right now.
  std::vector<std::uint64_t> adjacent_pair_keys() const {
    std::vector<std::uint64_t> keys;
    for (const Bond& b : mol->bonds()) {
      const std::uint32_t p = piece_of[b.a], q = piece_of[b.b];
      if (p != q) keys.push_back(pair_key(p, q));
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    return keys;
  }
};

// Outcome of merging one round's winner inside one molecule, produced in
// parallel and applied to the shared counters sequentially.
struct MolDiff {
  std::uint32_t mol_id = 0;
  std::uint64_t merges = 0;
  std::vector<std::uint32_t> removed_ids;
  struct Added {
    std::uint64_t key;
    std::string canon;
    std::uint32_t atom_count;
  };
  std::vector<Added> added;
};

struct InternTable {
  std::unordered_map<std::string, std::uint32_t> ids;
  struct Entry {
    std::string canon;
    std::int64_t count = 0;
    std::uint32_t atoms = 0;
    std::vector<std::uint32_t> postings;
  };
  std::vector<Entry> entries;

  std::uint32_t intern(const std::string& canon, std::uint32_t atoms) {
    auto it = ids.find(canon);
    if (it != ids.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(entries.size());
    ids.emplace(canon, id);
    entries.push_back({canon, 0, atoms, {}});
    return id;
  }
};

// Lexicographic rank order of the would-be union, for the left-to-right
// merge sweep.
bool rank_vector_less(const MolState& s, std::uint32_t p1, std::uint32_t q1,
                      std::uint32_t p2, std::uint32_t q2) {
  const auto u1 = s.union_atoms(p1, q1);
  const auto u2 = s.union_atoms(p2, q2);
  const std::size_t n = std::min(u1.size(), u2.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (s.ranks[u1[i]] != s.ranks[u2[i]])
      return s.ranks[u1[i]] < s.ranks[u2[i]];
  }
  return u1.size() < u2.size();
}

// Merges every non-overlapping occurrence of the winner canon in one
// molecule, updating the local pair list in place.
MolDiff merge_winner(MolState& s, std::uint32_t mol_id,
                     std::uint32_t winner_id, const std::string& winner_canon) {
  MolDiff diff;
  diff.mol_id = mol_id;

  struct Cand {
    std::uint32_t p, q;
  };
  std::vector<Cand> cands;
  for (const auto& [key, id] : s.pairs) {
    if (id != winner_id) continue;
    cands.push_back({static_cast<std::uint32_t>(key >> 32),
                     static_cast<std::uint32_t>(key & 0xffffffffu)});
  }
  std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
    return rank_vector_less(s, a.p, a.q, b.p, b.q);
  });

  for (const Cand& c : cands) {
    if (!s.pieces[c.p].alive || !s.pieces[c.q].alive) continue;  // overlapped

    const auto r = static_cast<std::uint32_t>(s.pieces.size());
    Piece merged;
    merged.atoms = s.union_atoms(c.p, c.q);
    s.pieces[c.p].alive = false;
    s.pieces[c.q].alive = false;
    for (const std::uint32_t a : merged.atoms) s.piece_of[a] = r;
    s.pieces.push_back(std::move(merged));
    ++diff.merges;

    // Pairs touching the dead pieces vanish; contributed ones are logged.
    auto touches = [&](std::uint64_t key) {
      const auto lo = static_cast<std::uint32_t>(key & 0xffffffffu);
      const auto hi = static_cast<std::uint32_t>(key >> 32);
      return lo == c.p || lo == c.q || hi == c.p || hi == c.q;
    };
    for (auto it = s.pairs.begin(); it != s.pairs.end();) {
      if (touches(it->first)) {
        diff.removed_ids.push_back(it->second);
        it = s.pairs.erase(it);
      } else {
        ++it;
      }
    }
    for (auto it = diff.added.begin(); it != diff.added.end();) {
      if (touches(it->key))
        it = diff.added.erase(it);
      else
        ++it;
    }

    // Fresh pairs around the new piece. Unions strictly outgrow the winner,
    // so none of them re-enter this round's candidate list.
    std::vector<std::uint32_t> nbr_pieces;
    for (const std::uint32_t a : s.pieces[r].atoms) {
      for (const auto& [v, bond] : s.mol->neighbors(a)) {
        (void)bond;
        const std::uint32_t q = s.piece_of[v];
        if (q != r) nbr_pieces.push_back(q);
      }
    }
    std::sort(nbr_pieces.begin(), nbr_pieces.end());
    nbr_pieces.erase(std::unique(nbr_pieces.begin(), nbr_pieces.end()),
                     nbr_pieces.end());
    for (const std::uint32_t q : nbr_pieces) {
      const std::uint64_t key = pair_key(r, q);
      MolDiff::Added add;
      add.key = key;
      add.canon = s.union_canon(r, q);
      add.atom_count =
          static_cast<std::uint32_t>(s.pieces[r].atoms.size() + s.pieces[q].atoms.size());
      diff.added.push_back(std::move(add));
    }
  }
  (void)winner_canon;
  return diff;
}

}  // namespace

FragmentVocabulary mine_vocabulary(const std::vector<Molecule>& corpus,
                                   std::size_t target_size,
                                   const MiningOptions& options) {
  if (corpus.empty()) throw EmptyCorpus("mining needs at least one molecule");

  const int threads = resolve_threads(options.threads);
  const auto t_start = std::chrono::steady_clock::now();

  // Per-molecule states and initial pair canons, in parallel.
  std::vector<MolState> states(corpus.size());
  struct InitOut {
    std::vector<std::pair<std::uint64_t, std::string>> pair_canons;
    std::vector<std::string> atom_canons;
  };
  std::vector<InitOut> init(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    states[i].init(corpus[i]);
    InitOut& out = init[i];
    const Molecule& m = corpus[i];
    out.atom_canons.reserve(m.atom_count());
    for (std::uint32_t a = 0; a < m.atom_count(); ++a) {
      const std::uint32_t one[] = {a};
      out.atom_canons.push_back(fragment_canon(m, one));
    }
    for (const std::uint64_t key : states[i].adjacent_pair_keys()) {
      const auto p = static_cast<std::uint32_t>(key >> 32);
      const auto q = static_cast<std::uint32_t>(key & 0xffffffffu);
      out.pair_canons.emplace_back(key, states[i].union_canon(p, q));
    }
  });

  // Seed entries: every distinct single-atom fragment with its count.
  std::unordered_map<std::string, std::uint64_t> atom_freq;
  std::uint64_t total_pieces = 0;
  for (const InitOut& out : init) {
    for (const std::string& c : out.atom_canons) ++atom_freq[c];
    total_pieces += out.atom_canons.size();
  }
  std::vector<VocabEntry> entries;
  entries.reserve(target_size);
  {
    std::vector<std::pair<std::string, std::uint64_t>> seeds(atom_freq.begin(),
                                                             atom_freq.end());
    std::sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (const auto& [canon, freq] : seeds)
      entries.push_back({static_cast<std::uint32_t>(entries.size()), canon,
                         freq, 1});
  }

  // Shared pair counters.
  InternTable table;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (const auto& [key, canon] : init[i].pair_canons) {
      const auto p = static_cast<std::uint32_t>(key >> 32);
      const auto q = static_cast<std::uint32_t>(key & 0xffffffffu);
      const auto atoms = static_cast<std::uint32_t>(
          states[i].pieces[p].atoms.size() + states[i].pieces[q].atoms.size());
      const std::uint32_t id = table.intern(canon, atoms);
      ++table.entries[id].count;
      table.entries[id].postings.push_back(static_cast<std::uint32_t>(i));
      states[i].pairs.emplace_back(key, id);
    }
    init[i] = InitOut{};  // release
  }

  std::unordered_set<std::uint32_t> promoted;
  bool truncated = false;
  std::uint32_t round = 0;

  while (entries.size() < target_size) {
    // Winner: highest count, then fewer atoms, then lexicographic canon.
    std::int64_t best_count = 0;
    std::uint32_t best_id = 0;
    bool found = false;
    for (std::uint32_t id = 0; id < table.entries.size(); ++id) {
      const auto& e = table.entries[id];
      if (e.count <= 0 || promoted.count(id)) continue;
      if (!found || e.count > best_count ||
          (e.count == best_count &&
           (e.atoms < table.entries[best_id].atoms ||
            (e.atoms == table.entries[best_id].atoms &&
             e.canon < table.entries[best_id].canon)))) {
        found = true;
        best_count = e.count;
        best_id = id;
      }
    }
    if (!found) {
      truncated = true;
      break;
    }

    ++round;
    promoted.insert(best_id);
    const std::string winner_canon = table.entries[best_id].canon;
    entries.push_back({static_cast<std::uint32_t>(entries.size()),
                       winner_canon,
                       static_cast<std::uint64_t>(best_count),
                       table.entries[best_id].atoms});

    // Molecules holding at least one occurrence.
    std::vector<std::uint32_t> affected = table.entries[best_id].postings;
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()),
                   affected.end());

    std::vector<MolDiff> diffs(affected.size());
    parallel_for(affected.size(), threads, [&](std::size_t k) {
      diffs[k] = merge_winner(states[affected[k]], affected[k], best_id,
                              winner_canon);
    });

    std::uint64_t merged = 0;
    for (const MolDiff& d : diffs) {
      merged += d.merges;
      total_pieces -= d.merges;
      for (const std::uint32_t id : d.removed_ids) --table.entries[id].count;
      for (const auto& add : d.added) {
        const std::uint32_t id = table.intern(add.canon, add.atom_count);
        ++table.entries[id].count;
        table.entries[id].postings.push_back(d.mol_id);
        states[d.mol_id].pairs.emplace_back(add.key, id);
      }
    }
    table.entries[best_id].postings.clear();
    table.entries[best_id].postings.shrink_to_fit();

    if (options.on_iteration) {
      MineIteration it;
      it.iteration = round;
      it.canon = winner_canon;
      it.frequency = static_cast<std::uint64_t>(best_count);
      it.occurrences_merged = merged;
      it.piece_count = total_pieces;
      it.elapsed_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t_start)
                          .count();
      options.on_iteration(it);
    }
  }

  return FragmentVocabulary::from_entries(std::move(entries), truncated);
}

const VocabEntry* FragmentVocabulary::find(std::string_view canon) const {
  auto it = index_.find(std::string(canon));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

FragmentVocabulary FragmentVocabulary::from_entries(
    std::vector<VocabEntry> entries, bool truncated) {
  FragmentVocabulary v;
  v.entries_ = std::move(entries);
  v.truncated_ = truncated;
  v.rebuild_index();
  return v;
}

void FragmentVocabulary::rebuild_index() {
  index_.clear();
  n_atom_ = 0;
  for (std::uint32_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].token_id != i)
      throw FormatError("vocabulary token ids must be contiguous");
    if (!index_.emplace(entries_[i].canon, i).second)
      throw FormatError("duplicate vocabulary canon: " + entries_[i].canon);
    if (entries_[i].atom_count == 1) ++n_atom_;
  }
}

void FragmentVocabulary::add_single_atoms(const Molecule& m) {
  for (std::uint32_t a = 0; a < m.atom_count(); ++a) {
    const std::uint32_t one[] = {a};
    const std::string canon = fragment_canon(m, one);
    if (index_.count(canon)) continue;
    VocabEntry e;
    e.token_id = static_cast<std::uint32_t>(entries_.size());
    e.canon = canon;
    e.frequency = 0;
    e.atom_count = 1;
    index_.emplace(e.canon, e.token_id);
    entries_.push_back(std::move(e));
    ++n_atom_;
  }
}

void FragmentVocabulary::save_tsv(std::ostream& out) const {
  out << "token_id\tcanon_smiles\tfrequency\n";
  for (const VocabEntry& e : entries_)
    out << e.token_id << '\t' << e.canon << '\t' << e.frequency << '\n';
}

void FragmentVocabulary::save_tsv_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary file: " + path);
  save_tsv(out);
}

FragmentVocabulary FragmentVocabulary::load_tsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("empty vocabulary file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "token_id\tcanon_smiles\tfrequency")
    throw FormatError("bad vocabulary header: " + line);

  std::vector<VocabEntry> entries;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos
                                                   : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw FormatError("vocabulary row needs three columns: " + line);
    VocabEntry e;
    try {
      e.token_id = static_cast<std::uint32_t>(std::stoul(line.substr(0, t1)));
      e.frequency = std::stoull(line.substr(t2 + 1));
    } catch (const std::exception&) {
      throw FormatError("bad number in vocabulary row: " + line);
    }
    e.canon = line.substr(t1 + 1, t2 - t1 - 1);
    if (e.token_id != row)
      throw FormatError("vocabulary token ids must be contiguous");
    try {
      e.atom_count =
          static_cast<std::uint32_t>(parse_smiles(e.canon).atom_count());
    } catch (const Error& err) {
      throw FormatError("unparsable vocabulary canon '" + e.canon +
                        "': " + err.what());
    }
    entries.push_back(std::move(e));
    ++row;
  }
  return from_entries(std::move(entries));
}

FragmentVocabulary FragmentVocabulary::load_tsv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file: " + path);
  return load_tsv(in);
}

Decomposition decompose(const Molecule& m, const FragmentVocabulary& vocab,
                        std::string molecule_id) {
  MolState s;
  s.init(m);

  // Every atom must be coverable before any merging starts.
  std::vector<std::string> atom_canons(m.atom_count());
  for (std::uint32_t a = 0; a < m.atom_count(); ++a) {
    const std::uint32_t one[] = {a};
    atom_canons[a] = fragment_canon(m, one);
    if (vocab.find(atom_canons[a]) == nullptr)
      throw OutOfVocabularyAtom("atom fragment '" + atom_canons[a] +
                                "' is not in the vocabulary");
  }

  std::vector<std::string> piece_canon(m.atom_count());
  for (std::uint32_t a = 0; a < m.atom_count(); ++a)
    piece_canon[a] = atom_canons[a];

  std::unordered_map<std::uint64_t, std::string> canon_cache;

  for (;;) {
    const VocabEntry* best = nullptr;
    std::uint64_t best_key = 0;
    bool have = false;
    for (const std::uint64_t key : s.adjacent_pair_keys()) {
      auto it = canon_cache.find(key);
      if (it == canon_cache.end()) {
        const auto p = static_cast<std::uint32_t>(key >> 32);
        const auto q = static_cast<std::uint32_t>(key & 0xffffffffu);
        it = canon_cache.emplace(key, s.union_canon(p, q)).first;
      }
      const VocabEntry* e = vocab.find(it->second);
      if (e == nullptr) continue;
      if (!have) {
        best = e;
        best_key = key;
        have = true;
        continue;
      }
      const bool better =
          e->frequency > best->frequency ||
          (e->frequency == best->frequency &&
           (e->atom_count < best->atom_count ||
            (e->atom_count == best->atom_count && e->canon < best->canon)));
      if (better) {
        best = e;
        best_key = key;
      } else if (e == best) {
        // Same vocabulary entry reachable at several places: take the
        // leftmost occurrence in canonical rank order.
        const auto p1 = static_cast<std::uint32_t>(best_key >> 32);
        const auto q1 = static_cast<std::uint32_t>(best_key & 0xffffffffu);
        const auto p2 = static_cast<std::uint32_t>(key >> 32);
        const auto q2 = static_cast<std::uint32_t>(key & 0xffffffffu);
        if (rank_vector_less(s, p2, q2, p1, q1)) best_key = key;
      }
    }
    if (!have) break;

    const auto p = static_cast<std::uint32_t>(best_key >> 32);
    const auto q = static_cast<std::uint32_t>(best_key & 0xffffffffu);
    const auto r = static_cast<std::uint32_t>(s.pieces.size());
    Piece merged;
    merged.atoms = s.union_atoms(p, q);
    s.pieces[p].alive = false;
    s.pieces[q].alive = false;
    for (const std::uint32_t a : merged.atoms) s.piece_of[a] = r;
    s.pieces.push_back(std::move(merged));
    piece_canon.push_back(best->canon);
  }

  Decomposition d;
  d.molecule_id = std::move(molecule_id);
  struct Ordered {
    std::uint32_t min_rank;
    std::uint32_t piece;
  };
  std::vector<Ordered> order;
  for (std::uint32_t pid = 0; pid < s.pieces.size(); ++pid) {
    if (!s.pieces[pid].alive) continue;
    std::uint32_t mr = ~0u;
    for (const std::uint32_t a : s.pieces[pid].atoms)
      mr = std::min(mr, s.ranks[a]);
    order.push_back({mr, pid});
  }
  std::sort(order.begin(), order.end(),
            [](const Ordered& a, const Ordered& b) { return a.min_rank < b.min_rank; });
  for (const Ordered& o : order) {
    DecompPiece piece;
    piece.canon = piece_canon[o.piece];
    piece.atoms = s.pieces[o.piece].atoms;
    std::sort(piece.atoms.begin(), piece.atoms.end());
    d.pieces.push_back(std::move(piece));
  }
  return d;
}

std::string fragment_token(std::string_view canon) {
  std::string out;
  out.reserve(canon.size() + 4);
  out += "<|";
  out += canon;
  out += "|>";
  return out;
}

std::optional<std::string> strip_fragment_token(std::string_view token) {
  if (token.size() < 4 || token.substr(0, 2) != "<|" ||
      token.substr(token.size() - 2) != "|>")
    return std::nullopt;
  return std::string(token.substr(2, token.size() - 4));
}

bool is_carbon_only_nonconjugated(const Molecule& m) {
  for (const Atom& a : m.atoms())
    if (a.atomic_num != 6) return false;
  for (const Bond& b : m.bonds())
    if (b.order == BondOrder::Aromatic) return false;
  auto multiple = [](BondOrder o) {
    return o == BondOrder::Double || o == BondOrder::Triple;
  };
  for (const Bond& b : m.bonds()) {
    if (b.order != BondOrder::Single) continue;
    auto has_other_multiple = [&](std::uint32_t atom, std::uint32_t skip_a,
                                  std::uint32_t skip_b) {
      for (const auto& [v, bi] : m.neighbors(atom)) {
        (void)v;
        const Bond& ob = m.bond(bi);
        if (ob.a == skip_a && ob.b == skip_b) continue;
        if (multiple(ob.order)) return true;
      }
      return false;
    };
    if (has_other_multiple(b.a, b.a, b.b) && has_other_multiple(b.b, b.a, b.b))
      return false;
  }
  return true;
}

std::vector<std::string> fragment_tokens(const Decomposition& d,
                                         TokenMode mode, Rng& rng) {
  std::vector<std::string> canons;
  canons.reserve(d.pieces.size());
  for (const DecompPiece& p : d.pieces) canons.push_back(p.canon);

  if (mode == TokenMode::Cot) {
    std::sort(canons.begin(), canons.end());
    std::vector<std::string> out;
    out.reserve(canons.size());
    for (const std::string& c : canons) out.push_back(fragment_token(c));
    return out;
  }

  std::sort(canons.begin(), canons.end());
  canons.erase(std::unique(canons.begin(), canons.end()), canons.end());
  std::vector<std::string> survivors;
  for (const std::string& c : canons) {
    const Molecule frag = parse_smiles(c);
    if (frag.atom_count() < 2) continue;  // a bare atom constrains nothing
    if (is_carbon_only_nonconjugated(frag)) continue;
    survivors.push_back(c);
  }
  if (survivors.empty()) return {};

  std::size_t k = 1 + static_cast<std::size_t>(rng.below(3));
  if (k > survivors.size()) k = survivors.size();
  std::vector<std::string> out;
  out.reserve(k);
  for (const std::size_t idx : rng.sample_indices(survivors.size(), k))
    out.push_back(fragment_token(survivors[idx]));
  return out;
}

}  // namespace molfrag
