#ifndef MOLFRAG_FINGERPRINT_HPP
#define MOLFRAG_FINGERPRINT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "molfrag/molgraph.hpp"

namespace molfrag {

// Fixed-width bit set for structural fingerprints.
class BitFingerprint {
 public:
  BitFingerprint() = default;
  explicit BitFingerprint(std::size_t nbits);

  std::size_t nbits() const { return nbits_; }
  bool test(std::size_t i) const {
    return (blocks_[i >> 6] >> (i & 63)) & 1u;
  }
  void set(std::size_t i) { blocks_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  std::size_t count() const;

  const std::vector<std::uint64_t>& blocks() const { return blocks_; }

  // Hex string of nbits/4 characters. Character i holds bits 4i..4i+3,
  // bit 4i in the high position of the nibble. nbits must be a multiple
  // of four (it always is for fingerprints made here).
  std::string to_hex() const;
  static BitFingerprint from_hex(std::string_view hex);

  friend bool operator==(const BitFingerprint& a, const BitFingerprint& b) {
    return a.nbits_ == b.nbits_ && a.blocks_ == b.blocks_;
  }

 private:
  std::size_t nbits_ = 0;
  std::vector<std::uint64_t> blocks_;
};

// Circular substructure fingerprint. Each atom starts from a hashed
// invariant over (element, degree, charge, explicit hydrogens, ring flag,
// aromatic flag); round r rehashes the previous code with the sorted
// (bond order, neighbor code) list. Every code folds onto nbits by
// modulo. Radius zero always contributes; larger radii only for atoms
// with at least one neighbor, so a lone atom sets exactly one bit.
// Relabeling-invariant; not interchangeable with any other toolkit's bits.
BitFingerprint morgan_fingerprint(const Molecule& m, int radius = 2,
                                  std::size_t nbits = 2048);

// |a AND b| / |a OR b|. Two empty fingerprints count as identical (1.0).
// Throws LengthMismatch when widths differ.
double tanimoto(const BitFingerprint& a, const BitFingerprint& b);

// Dense feature vector with an external id.
struct FeatureVector {
  std::string id;
  std::vector<double> values;
};

// dot(a,b) / (|a| |b|). Throws LengthMismatch on different dimensions and
// ZeroVector when either norm is zero.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Feature file: "dim=<d> count=<n>" header, then one "<id> v1 v2 ..."
// line per vector.
void save_features(std::ostream& out, const std::vector<FeatureVector>& fv);
void save_features_file(const std::string& path,
                        const std::vector<FeatureVector>& fv);
std::vector<FeatureVector> load_features(std::istream& in);
std::vector<FeatureVector> load_features_file(const std::string& path);

// Fingerprint dump: one "<id> <hex>" line per molecule; width is implied
// by the hex length.
void save_fingerprints(std::ostream& out, const std::vector<std::string>& ids,
                       const std::vector<BitFingerprint>& fps);
void save_fingerprints_file(const std::string& path,
                            const std::vector<std::string>& ids,
                            const std::vector<BitFingerprint>& fps);
std::vector<std::pair<std::string, BitFingerprint>> load_fingerprints(
    std::istream& in);
std::vector<std::pair<std::string, BitFingerprint>> load_fingerprints_file(
    const std::string& path);

}  // namespace molfrag

#endif
