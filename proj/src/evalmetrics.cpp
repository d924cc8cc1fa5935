#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <regex>

#include "json.hpp"
#include "molfrag/error.hpp"
#include "molfrag/evalmetrics.hpp"
#include "molfrag/fingerprint.hpp"

namespace molfrag {

bool exact_match(const GenerationPair& p) {
  try {
    return canonical_smiles(p.generated) == canonical_smiles(p.reference);
  } catch (const Error&) {
    return false;
  }
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                         diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t levenshtein(const GenerationPair& p, bool canonicalize) {
  if (!canonicalize) return levenshtein(p.generated, p.reference);
  auto canon_or_raw = [](const std::string& s) {
    try {
      return canonical_smiles(s);
    } catch (const Error&) {
      return s;
    }
  };
  return levenshtein(canon_or_raw(p.generated), canon_or_raw(p.reference));
}

namespace {

// SMILES atom tokens: bracket atoms, two-letter halogens, %nn ring
// closures; every other byte stands alone.
std::vector<std::string> atom_tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '[') {
      const std::size_t close = s.find(']', i);
      if (close == std::string_view::npos) {
        out.emplace_back(s.substr(i));
        break;
      }
      out.emplace_back(s.substr(i, close - i + 1));
      i = close + 1;
    } else if ((s[i] == 'C' || s[i] == 'B') && i + 1 < s.size() &&
               ((s[i] == 'C' && s[i + 1] == 'l') ||
                (s[i] == 'B' && s[i + 1] == 'r'))) {
      out.emplace_back(s.substr(i, 2));
      i += 2;
    } else if (s[i] == '%' && i + 2 < s.size()) {
      out.emplace_back(s.substr(i, 3));
      i += 3;
    } else {
      out.emplace_back(s.substr(i, 1));
      i += 1;
    }
  }
  return out;
}

std::vector<std::string> char_tokenize(std::string_view s) {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (const char c : s) out.emplace_back(1, c);
  return out;
}

void count_ngrams(const std::vector<std::string>& tokens, std::size_t n,
                  std::map<std::vector<std::string>, std::size_t>& counts) {
  if (tokens.size() < n) return;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[{tokens.begin() + i, tokens.begin() + i + n}];
}

}  // namespace

double smiles_bleu(const std::vector<GenerationPair>& pairs,
                   bool atom_tokens) {
  if (pairs.empty()) throw EmptyCorpus("BLEU needs at least one pair");

  constexpr std::size_t kMaxOrder = 4;
  std::size_t matched[kMaxOrder] = {0, 0, 0, 0};
  std::size_t total[kMaxOrder] = {0, 0, 0, 0};
  std::size_t cand_len = 0, ref_len = 0;

  for (const GenerationPair& p : pairs) {
    const auto cand = atom_tokens ? atom_tokenize(p.generated)
                                  : char_tokenize(p.generated);
    const auto ref = atom_tokens ? atom_tokenize(p.reference)
                                 : char_tokenize(p.reference);
    cand_len += cand.size();
    ref_len += ref.size();
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      if (cand.size() < n) continue;
      total[n - 1] += cand.size() - n + 1;
      std::map<std::vector<std::string>, std::size_t> cc, rc;
      count_ngrams(cand, n, cc);
      count_ngrams(ref, n, rc);
      for (const auto& [gram, c] : cc) {
        const auto it = rc.find(gram);
        if (it != rc.end()) matched[n - 1] += std::min(c, it->second);
      }
    }
  }

  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    if (total[n] == 0) continue;  // no candidate long enough for this order
    ++orders;
    if (matched[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched[n]) /
                        static_cast<double>(total[n]));
  }
  if (orders == 0) return 0.0;

  const double geo = std::exp(log_sum / static_cast<double>(orders));
  if (cand_len == 0) return 0.0;
  const double bp =
      cand_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) /
                               static_cast<double>(cand_len));
  return bp * geo;
}

FtsResult fingerprint_fts(const std::vector<GenerationPair>& pairs,
                          bool drop_invalid) {
  FtsResult r;
  double sum = 0.0;
  std::size_t used = 0;
  for (const GenerationPair& p : pairs) {
    Molecule gen;
    try {
      gen = parse_smiles(p.generated);
    } catch (const Error&) {
      ++r.invalid_count;
      if (!drop_invalid) ++used;  // contributes zero
      continue;
    }
    const Molecule ref = parse_smiles(p.reference);
    sum += tanimoto(morgan_fingerprint(gen), morgan_fingerprint(ref));
    ++used;
  }
  r.mean = used == 0 ? 0.0 : sum / static_cast<double>(used);
  return r;
}

double validity(const std::vector<GenerationPair>& pairs) {
  if (pairs.empty()) return 0.0;
  std::size_t ok = 0;
  for (const GenerationPair& p : pairs)
    if (is_valid_smiles(p.generated)) ++ok;
  return static_cast<double>(ok) / static_cast<double>(pairs.size());
}

namespace {

struct InducedMatcher {
  const Molecule& target;
  const Molecule& frag;
  std::vector<int> map_to_target;    // fragment atom -> target atom or -1
  std::vector<char> target_used;
  std::vector<std::uint32_t> order;  // fragment atoms, connected BFS order

  InducedMatcher(const Molecule& t, const Molecule& f)
      : target(t), frag(f), map_to_target(f.atom_count(), -1),
        target_used(t.atom_count(), 0) {
    std::vector<char> seen(f.atom_count(), 0);
    order.reserve(f.atom_count());
    order.push_back(0);
    seen[0] = 1;
    for (std::size_t i = 0; i < order.size(); ++i)
      for (const auto& [v, bi] : f.neighbors(order[i])) {
        (void)bi;
        if (!seen[v]) {
          seen[v] = 1;
          order.push_back(v);
        }
      }
  }

  static bool atoms_compatible(const Atom& a, const Atom& b) {
    return a.atomic_num == b.atomic_num && a.formal_charge == b.formal_charge &&
           a.aromatic == b.aromatic;
  }

  bool feasible(std::uint32_t fa, std::uint32_t ta) const {
    if (!atoms_compatible(frag.atom(fa), target.atom(ta))) return false;
    // Induced: bonds to every already-mapped fragment atom must agree in
    // both presence and order, and non-bonds must stay non-bonds.
    for (std::uint32_t other = 0; other < frag.atom_count(); ++other) {
      const int mapped = map_to_target[other];
      if (mapped < 0 || other == fa) continue;
      const int fb = frag.bond_between(fa, other);
      const int tb = target.bond_between(ta, static_cast<std::size_t>(mapped));
      if ((fb < 0) != (tb < 0)) return false;
      if (fb >= 0 && frag.bond(fb).order != target.bond(tb).order)
        return false;
    }
    return true;
  }

  bool extend(std::size_t depth) {
    if (depth == order.size()) return true;
    const std::uint32_t fa = order[depth];
    for (std::uint32_t ta = 0; ta < target.atom_count(); ++ta) {
      if (target_used[ta] || !feasible(fa, ta)) continue;
      map_to_target[fa] = static_cast<int>(ta);
      target_used[ta] = 1;
      if (extend(depth + 1)) return true;
      map_to_target[fa] = -1;
      target_used[ta] = 0;
    }
    return false;
  }
};

}  // namespace

bool has_fragment(const Molecule& target, const Molecule& fragment) {
  if (fragment.atom_count() == 0 ||
      fragment.atom_count() > target.atom_count())
    return false;
  InducedMatcher m(target, fragment);
  return m.extend(0);
}

int fragment_satisfaction(const Molecule& gen,
                          const std::vector<std::string>& required_canons) {
  int phi = 0;
  for (const std::string& canon : required_canons) {
    Molecule frag;
    try {
      frag = parse_smiles(canon);
    } catch (const Error&) {
      continue;  // an unusable requirement cannot be satisfied
    }
    if (has_fragment(gen, frag)) ++phi;
  }
  return phi;
}

std::pair<double, double> cot_consistency(
    const std::vector<std::string>& chain_canons, const Molecule& final_mol,
    const FragmentVocabulary& vocab) {
  const Decomposition d = decompose(final_mol, vocab);
  std::map<std::string, std::size_t> want, have;
  for (const std::string& c : chain_canons) ++want[c];
  for (const DecompPiece& p : d.pieces) ++have[p.canon];
  std::size_t inter = 0;
  for (const auto& [canon, n] : want) {
    const auto it = have.find(canon);
    if (it != have.end()) inter += std::min(n, it->second);
  }
  const double precision =
      chain_canons.empty()
          ? 0.0
          : static_cast<double>(inter) / static_cast<double>(chain_canons.size());
  const double recall =
      d.pieces.empty()
          ? 0.0
          : static_cast<double>(inter) / static_cast<double>(d.pieces.size());
  return {precision, recall};
}

std::optional<double> extract_numeric(std::string_view text) {
  static const std::regex number(
      R"([+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)");
  std::cmatch m;
  if (!std::regex_search(text.begin(), text.end(), m, number))
    return std::nullopt;
  return std::stod(m.str());
}

PropertyQaScore property_qa_score(const std::vector<std::string>& answers,
                                  const std::vector<double>& truths,
                                  PropertyKind kind) {
  if (answers.size() != truths.size())
    throw LengthMismatch("answer and truth counts differ: " +
                         std::to_string(answers.size()) + " vs " +
                         std::to_string(truths.size()));
  if (answers.size() < 2)
    throw EmptyCorpus("property qa scoring needs at least two answers");

  std::vector<double> vp, vt;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const auto num = extract_numeric(answers[i]);
    if (!num || !validity_range_check(kind, *num)) continue;
    vp.push_back(*num);
    vt.push_back(truths[i]);
  }

  PropertyQaScore s;
  s.valid_ratio =
      static_cast<double>(vp.size()) / static_cast<double>(answers.size());
  if (vp.empty()) return s;

  double mae = 0.0, mean_t = 0.0;
  for (std::size_t i = 0; i < vp.size(); ++i) {
    mae += std::abs(vp[i] - vt[i]);
    mean_t += vt[i];
  }
  mae /= static_cast<double>(vp.size());
  mean_t /= static_cast<double>(vt.size());
  s.mae = mae;

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < vp.size(); ++i) {
    ss_res += (vt[i] - vp[i]) * (vt[i] - vp[i]);
    ss_tot += (vt[i] - mean_t) * (vt[i] - mean_t);
  }
  if (ss_tot > 0.0) s.r2 = 1.0 - ss_res / ss_tot;
  return s;
}

double high_affinity_rate(const std::vector<double>& scores,
                          double threshold) {
  if (scores.empty()) return 0.0;
  std::size_t n = 0;
  for (const double s : scores)
    if (s <= threshold) ++n;
  return static_cast<double>(n) / static_cast<double>(scores.size());
}

MetricReport evaluate_pairs(const std::vector<GenerationPair>& pairs,
                            const EvalOptions& options) {
  MetricReport r;
  r.count = pairs.size();

  const double bleu = smiles_bleu(pairs, options.bleu_atom_tokens);
  std::size_t exact = 0;
  double lev = 0.0;
  for (const GenerationPair& p : pairs) {
    if (exact_match(p)) ++exact;
    lev += static_cast<double>(levenshtein(p, options.levenshtein_canonical));
  }
  const FtsResult fts = fingerprint_fts(pairs, options.fts_drop_invalid);
  r.invalid_count = fts.invalid_count;

  const auto n = static_cast<double>(pairs.size());
  r.metrics = {
      {"BLEU", bleu},
      {"Exact", static_cast<double>(exact) / n},
      {"Levenshtein", lev / n},
      {"Morgan FTS", fts.mean},
      {"Validity", validity(pairs)},
  };
  return r;
}

void MetricReport::write_tsv(std::ostream& out) const {
  for (std::size_t i = 0; i < metrics.size(); ++i)
    out << (i ? "\t" : "") << metrics[i].first;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", metrics[i].second);
    out << (i ? "\t" : "") << buf;
  }
  out << '\n';
}

void MetricReport::write_json(std::ostream& out) const {
  nlohmann::ordered_json j;
  j["count"] = count;
  j["invalid_count"] = invalid_count;
  for (const auto& [name, value] : metrics) j["metrics"][name] = value;
  out << j.dump() << '\n';
}

std::vector<GenerationPair> read_pairs(std::istream& in) {
  std::vector<GenerationPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError("pairs line " + std::to_string(line_no) +
                        " needs generated<TAB>reference");
    out.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return out;
}

std::vector<GenerationPair> read_pairs_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open pairs file: " + path);
  return read_pairs(in);
}

}  // namespace molfrag
