#ifndef MOLFRAG_SIMSPACE_HPP
#define MOLFRAG_SIMSPACE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "molfrag/fingerprint.hpp"
#include "molfrag/rng.hpp"

namespace molfrag {

// Pairwise similarity over one molecular encoding. Symmetric with a unit
// diagonal when built by similarity_matrix.
struct SimilarityMatrix {
  std::string encoding_label;
  std::size_t n = 0;
  std::vector<double> values;  // row-major n*n

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

// Cosine over feature vectors. Throws ShapeMismatch for fewer than two
// items; kernel errors (ZeroVector, LengthMismatch) propagate.
SimilarityMatrix similarity_matrix(const std::vector<FeatureVector>& items,
                                   std::string label, int threads = 1);

// Tanimoto over fingerprints.
SimilarityMatrix similarity_matrix(const std::vector<BitFingerprint>& items,
                                   std::string label, int threads = 1);

// Pearson correlation between two equally shaped matrices, taken over all
// n*n entries (the diagonal can be left out). Throws ShapeMismatch and
// ConstantMatrix.
double pearson(const SimilarityMatrix& p, const SimilarityMatrix& q,
               bool exclude_diagonal = false);

// Pairwise Pearson table across k encodings: symmetric, unit diagonal.
struct BiasReport {
  std::vector<std::string> labels;
  std::size_t k = 0;
  std::vector<double> values;  // row-major k*k

  double at(std::size_t i, std::size_t j) const { return values[i * k + j]; }

  // Table with a label header row and column. Six decimals.
  void write_tsv(std::ostream& out) const;
  // Long form: encoding_a,encoding_b,pearson with full precision.
  void write_csv(std::ostream& out) const;
};

BiasReport bias_report(const std::vector<SimilarityMatrix>& matrices,
                       bool exclude_diagonal = false);

// Dense real matrix, one embedding per row.
struct EmbeddingMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;  // row-major

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

// Appends n_new rows drawn entrywise as mu + sigma * xi, xi ~ N(0,1),
// where mu and sigma are the mean and population standard deviation of
// all base entries. The base rows are copied through untouched. With
// per_dimension, mu and sigma are taken per column instead.
EmbeddingMatrix augment_embeddings(const EmbeddingMatrix& base,
                                   std::size_t n_new, Rng& rng,
                                   bool per_dimension = false);

// Column-wise drift between two weight matrices: mean absolute change of
// column norms, and mean (1 - cosine) of column directions. Throws
// ShapeMismatch and ZeroColumn.
std::pair<double, double> weight_drift(const EmbeddingMatrix& w0,
                                       const EmbeddingMatrix& wt);

// Dense-matrix text formats: "n=<n>" header for similarity matrices,
// "rows=<r> cols=<c>" for embeddings, then one row of full-precision
// decimals per line.
void save_similarity(std::ostream& out, const SimilarityMatrix& m);
void save_similarity_file(const std::string& path, const SimilarityMatrix& m);
SimilarityMatrix load_similarity(std::istream& in, std::string label = "");
SimilarityMatrix load_similarity_file(const std::string& path,
                                      std::string label = "");

void save_embeddings(std::ostream& out, const EmbeddingMatrix& m);
void save_embeddings_file(const std::string& path, const EmbeddingMatrix& m);
EmbeddingMatrix load_embeddings(std::istream& in);
EmbeddingMatrix load_embeddings_file(const std::string& path);

}  // namespace molfrag

#endif
