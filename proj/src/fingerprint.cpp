#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "molfrag/error.hpp"
#include "molfrag/fingerprint.hpp"
#include "molfrag/rng.hpp"

namespace molfrag {

BitFingerprint::BitFingerprint(std::size_t nbits)
    : nbits_(nbits), blocks_((nbits + 63) / 64, 0) {}

std::size_t BitFingerprint::count() const {
  std::size_t n = 0;
  for (const std::uint64_t b : blocks_) n += std::popcount(b);
  return n;
}

std::string BitFingerprint::to_hex() const {
  static const char digits[] = "0123456789abcdef";
  std::string out(nbits_ / 4, '0');
  for (std::size_t i = 0; i < out.size(); ++i) {
    unsigned nibble = 0;
    for (unsigned k = 0; k < 4; ++k)
      if (test(4 * i + k)) nibble |= 8u >> k;
    out[i] = digits[nibble];
  }
  return out;
}

BitFingerprint BitFingerprint::from_hex(std::string_view hex) {
  BitFingerprint fp(hex.size() * 4);
  for (std::size_t i = 0; i < hex.size(); ++i) {
    const char c = hex[i];
    unsigned nibble;
    if (c >= '0' && c <= '9')
      nibble = static_cast<unsigned>(c - '0');
    else if (c >= 'a' && c <= 'f')
      nibble = static_cast<unsigned>(c - 'a') + 10;
    else if (c >= 'A' && c <= 'F')
      nibble = static_cast<unsigned>(c - 'A') + 10;
    else
      throw FormatError(std::string("bad hex digit '") + c + "'");
    for (unsigned k = 0; k < 4; ++k)
      if (nibble & (8u >> k)) fp.set(4 * i + k);
  }
  return fp;
}

namespace {

std::uint64_t hash2(std::uint64_t a, std::uint64_t b) {
  return Rng::mix(a * 0x9e3779b97f4a7c15ull + b);
}

}  // namespace

BitFingerprint morgan_fingerprint(const Molecule& m, int radius,
                                  std::size_t nbits) {
  BitFingerprint fp(nbits);
  const std::size_t n = m.atom_count();
  if (n == 0) return fp;

  std::vector<std::uint64_t> code(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = m.atom(i);
    std::uint64_t h = Rng::mix(static_cast<std::uint64_t>(a.atomic_num));
    h = hash2(h, m.neighbors(i).size());
    h = hash2(h, static_cast<std::uint64_t>(
                     static_cast<std::int64_t>(a.formal_charge) + 16));
    h = hash2(h, a.explicit_h);
    h = hash2(h, a.in_ring ? 1 : 0);
    h = hash2(h, a.aromatic ? 1 : 0);
    code[i] = h;
    fp.set(h % nbits);
  }

  std::vector<std::uint64_t> next(n);
  for (int r = 1; r <= radius; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& nbrs = m.neighbors(i);
      if (nbrs.empty()) {
        next[i] = code[i];
        continue;
      }
      std::vector<std::pair<std::uint32_t, std::uint64_t>> env;
      env.reserve(nbrs.size());
      for (const auto& [v, bi] : nbrs)
        env.emplace_back(static_cast<std::uint32_t>(m.bond(bi).order),
                         code[v]);
      std::sort(env.begin(), env.end());
      std::uint64_t h = hash2(static_cast<std::uint64_t>(r), code[i]);
      for (const auto& [order, c] : env) h = hash2(hash2(h, order), c);
      next[i] = h;
      fp.set(h % nbits);
    }
    code = next;
  }
  return fp;
}

double tanimoto(const BitFingerprint& a, const BitFingerprint& b) {
  if (a.nbits() != b.nbits())
    throw LengthMismatch("fingerprint widths differ: " +
                         std::to_string(a.nbits()) + " vs " +
                         std::to_string(b.nbits()));
  std::size_t both = 0, any = 0;
  const auto& ba = a.blocks();
  const auto& bb = b.blocks();
  for (std::size_t i = 0; i < ba.size(); ++i) {
    both += std::popcount(ba[i] & bb[i]);
    any += std::popcount(ba[i] | bb[i]);
  }
  return any == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(any);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw LengthMismatch("vector dimensions differ: " +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw ZeroVector("cosine of a zero vector is undefined");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void save_features(std::ostream& out, const std::vector<FeatureVector>& fv) {
  const std::size_t dim = fv.empty() ? 0 : fv.front().values.size();
  out << "dim=" << dim << " count=" << fv.size() << "\n";
  char buf[32];
  for (const FeatureVector& f : fv) {
    if (f.values.size() != dim)
      throw LengthMismatch("feature vector '" + f.id +
                           "' has dimension " +
                           std::to_string(f.values.size()) + ", expected " +
                           std::to_string(dim));
    out << f.id;
    for (const double v : f.values) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

void save_features_file(const std::string& path,
                        const std::vector<FeatureVector>& fv) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file: " + path);
  save_features(out, fv);
}

std::vector<FeatureVector> load_features(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty feature file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t dim = 0, count = 0;
  if (std::sscanf(line.c_str(), "dim=%zu count=%zu", &dim, &count) != 2)
    throw FormatError("bad feature header: " + line);

  std::vector<FeatureVector> out;
  out.reserve(count);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    FeatureVector f;
    if (!(row >> f.id)) throw FormatError("bad feature row: " + line);
    double v;
    while (row >> v) f.values.push_back(v);
    if (f.values.size() != dim)
      throw FormatError("feature row '" + f.id + "' has " +
                        std::to_string(f.values.size()) +
                        " values, header says " + std::to_string(dim));
    out.push_back(std::move(f));
  }
  if (out.size() != count)
    throw FormatError("feature file holds " + std::to_string(out.size()) +
                      " rows, header says " + std::to_string(count));
  return out;
}

std::vector<FeatureVector> load_features_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file: " + path);
  return load_features(in);
}

void save_fingerprints(std::ostream& out, const std::vector<std::string>& ids,
                       const std::vector<BitFingerprint>& fps) {
  if (ids.size() != fps.size())
    throw LengthMismatch("id and fingerprint counts differ");
  for (std::size_t i = 0; i < fps.size(); ++i)
    out << ids[i] << ' ' << fps[i].to_hex() << '\n';
}

void save_fingerprints_file(const std::string& path,
                            const std::vector<std::string>& ids,
                            const std::vector<BitFingerprint>& fps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write fingerprint file: " + path);
  save_fingerprints(out, ids, fps);
}

std::vector<std::pair<std::string, BitFingerprint>> load_fingerprints(
    std::istream& in) {
  std::vector<std::pair<std::string, BitFingerprint>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t sp = line.find(' ');
    if (sp == std::string::npos)
      throw FormatError("fingerprint row needs an id and hex: " + line);
    out.emplace_back(line.substr(0, sp),
                     BitFingerprint::from_hex(
                         std::string_view(line).substr(sp + 1)));
  }
  return out;
}

std::vector<std::pair<std::string, BitFingerprint>> load_fingerprints_file(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open fingerprint file: " + path);
  return load_fingerprints(in);
}

}  // namespace molfrag
