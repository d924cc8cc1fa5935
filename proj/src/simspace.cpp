#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "molfrag/error.hpp"
#include "molfrag/parallel.hpp"
#include "molfrag/simspace.hpp"

namespace molfrag {

namespace {

template <typename Kernel>
SimilarityMatrix build_matrix(std::size_t n, std::string label, int threads,
                              Kernel&& kernel) {
  if (n < 2)
    throw ShapeMismatch("similarity matrix needs at least two items, got " +
                        std::to_string(n));
  SimilarityMatrix m;
  m.encoding_label = std::move(label);
  m.n = n;
  m.values.assign(n * n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    m.values[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = kernel(i, j);
      m.values[i * n + j] = s;
      m.values[j * n + i] = s;
    }
  });
  return m;
}

void write_row(std::ostream& out, const double* row, std::size_t n) {
  char buf[32];
  for (std::size_t j = 0; j < n; ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", row[j]);
    if (j) out << ' ';
    out << buf;
  }
  out << '\n';
}

std::vector<double> read_row(const std::string& line, std::size_t expect,
                             const char* what) {
  std::istringstream row(line);
  std::vector<double> vals;
  vals.reserve(expect);
  double v;
  while (row >> v) vals.push_back(v);
  if (vals.size() != expect)
    throw FormatError(std::string(what) + " row holds " +
                      std::to_string(vals.size()) + " values, expected " +
                      std::to_string(expect));
  return vals;
}

}  // namespace

SimilarityMatrix similarity_matrix(const std::vector<FeatureVector>& items,
                                   std::string label, int threads) {
  return build_matrix(items.size(), std::move(label), threads,
                      [&](std::size_t i, std::size_t j) {
                        return cosine(items[i].values, items[j].values);
                      });
}

SimilarityMatrix similarity_matrix(const std::vector<BitFingerprint>& items,
                                   std::string label, int threads) {
  return build_matrix(items.size(), std::move(label), threads,
                      [&](std::size_t i, std::size_t j) {
                        return tanimoto(items[i], items[j]);
                      });
}

double pearson(const SimilarityMatrix& p, const SimilarityMatrix& q,
               bool exclude_diagonal) {
  if (p.n != q.n)
    throw ShapeMismatch("matrix sizes differ: " + std::to_string(p.n) +
                        " vs " + std::to_string(q.n));
  double sp = 0, sq = 0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < p.n; ++i)
    for (std::size_t j = 0; j < p.n; ++j) {
      if (exclude_diagonal && i == j) continue;
      sp += p.at(i, j);
      sq += q.at(i, j);
      ++cnt;
    }
  if (cnt == 0) throw ShapeMismatch("no entries to correlate");
  const double mp = sp / static_cast<double>(cnt);
  const double mq = sq / static_cast<double>(cnt);
  double cov = 0, vp = 0, vq = 0;
  for (std::size_t i = 0; i < p.n; ++i)
    for (std::size_t j = 0; j < p.n; ++j) {
      if (exclude_diagonal && i == j) continue;
      const double dp = p.at(i, j) - mp;
      const double dq = q.at(i, j) - mq;
      cov += dp * dq;
      vp += dp * dp;
      vq += dq * dq;
    }
  if (vp == 0.0)
    throw ConstantMatrix("matrix '" + p.encoding_label + "' is constant");
  if (vq == 0.0)
    throw ConstantMatrix("matrix '" + q.encoding_label + "' is constant");
  return std::clamp(cov / std::sqrt(vp * vq), -1.0, 1.0);
}

BiasReport bias_report(const std::vector<SimilarityMatrix>& matrices,
                       bool exclude_diagonal) {
  if (matrices.size() < 2)
    throw ShapeMismatch("bias report needs at least two matrices, got " +
                        std::to_string(matrices.size()));
  for (const SimilarityMatrix& m : matrices)
    if (m.n != matrices.front().n)
      throw ShapeMismatch("matrix '" + m.encoding_label +
                          "' differs in size from '" +
                          matrices.front().encoding_label + "'");
  BiasReport r;
  r.k = matrices.size();
  r.values.assign(r.k * r.k, 1.0);
  for (const SimilarityMatrix& m : matrices) r.labels.push_back(m.encoding_label);
  for (std::size_t i = 0; i < r.k; ++i)
    for (std::size_t j = i + 1; j < r.k; ++j) {
      const double rho = pearson(matrices[i], matrices[j], exclude_diagonal);
      r.values[i * r.k + j] = rho;
      r.values[j * r.k + i] = rho;
    }
  return r;
}

void BiasReport::write_tsv(std::ostream& out) const {
  out << "encoding";
  for (const std::string& l : labels) out << '\t' << l;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < k; ++i) {
    out << labels[i];
    for (std::size_t j = 0; j < k; ++j) {
      std::snprintf(buf, sizeof buf, "%.6f", at(i, j));
      out << '\t' << buf;
    }
    out << '\n';
  }
}

void BiasReport::write_csv(std::ostream& out) const {
  out << "encoding_a,encoding_b,pearson\n";
  char buf[32];
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", at(i, j));
      out << labels[i] << ',' << labels[j] << ',' << buf << '\n';
    }
}

EmbeddingMatrix augment_embeddings(const EmbeddingMatrix& base,
                                   std::size_t n_new, Rng& rng,
                                   bool per_dimension) {
  if (n_new == 0) return base;
  if (base.rows == 0 || base.cols == 0)
    throw ShapeMismatch("cannot augment an empty embedding matrix");

  EmbeddingMatrix out;
  out.rows = base.rows + n_new;
  out.cols = base.cols;
  out.values = base.values;
  out.values.resize(out.rows * out.cols);

  const auto count = static_cast<double>(base.values.size());
  std::vector<double> mu, sigma;
  if (per_dimension) {
    mu.assign(base.cols, 0.0);
    sigma.assign(base.cols, 0.0);
    for (std::size_t r = 0; r < base.rows; ++r)
      for (std::size_t c = 0; c < base.cols; ++c) mu[c] += base.at(r, c);
    for (double& v : mu) v /= static_cast<double>(base.rows);
    for (std::size_t r = 0; r < base.rows; ++r)
      for (std::size_t c = 0; c < base.cols; ++c) {
        const double d = base.at(r, c) - mu[c];
        sigma[c] += d * d;
      }
    for (double& v : sigma) v = std::sqrt(v / static_cast<double>(base.rows));
  } else {
    double m = 0;
    for (const double v : base.values) m += v;
    m /= count;
    double var = 0;
    for (const double v : base.values) var += (v - m) * (v - m);
    mu.assign(base.cols, m);
    sigma.assign(base.cols, std::sqrt(var / count));
  }

  for (std::size_t r = base.rows; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c)
      out.at(r, c) = mu[c] + sigma[c] * rng.normal();
  return out;
}

std::pair<double, double> weight_drift(const EmbeddingMatrix& w0,
                                       const EmbeddingMatrix& wt) {
  if (w0.rows != wt.rows || w0.cols != wt.cols)
    throw ShapeMismatch("weight matrices differ in shape");
  if (w0.cols == 0 || w0.rows == 0)
    throw ShapeMismatch("weight matrices are empty");

  double dm = 0, dd = 0;
  for (std::size_t c = 0; c < w0.cols; ++c) {
    double n0 = 0, nt = 0, dot = 0;
    for (std::size_t r = 0; r < w0.rows; ++r) {
      const double a = w0.at(r, c);
      const double b = wt.at(r, c);
      n0 += a * a;
      nt += b * b;
      dot += a * b;
    }
    n0 = std::sqrt(n0);
    nt = std::sqrt(nt);
    if (n0 == 0.0 || nt == 0.0)
      throw ZeroColumn("column " + std::to_string(c) + " has zero norm");
    dm += std::abs(nt - n0);
    dd += 1.0 - dot / (n0 * nt);
  }
  const auto k = static_cast<double>(w0.cols);
  return {dm / k, dd / k};
}

void save_similarity(std::ostream& out, const SimilarityMatrix& m) {
  out << "n=" << m.n << '\n';
  for (std::size_t i = 0; i < m.n; ++i)
    write_row(out, m.values.data() + i * m.n, m.n);
}

void save_similarity_file(const std::string& path, const SimilarityMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write similarity file: " + path);
  save_similarity(out, m);
}

SimilarityMatrix load_similarity(std::istream& in, std::string label) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty similarity file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t n = 0;
  if (std::sscanf(line.c_str(), "n=%zu", &n) != 1)
    throw FormatError("bad similarity header: " + line);
  SimilarityMatrix m;
  m.encoding_label = std::move(label);
  m.n = n;
  m.values.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw FormatError("similarity file ends after " + std::to_string(i) +
                        " of " + std::to_string(n) + " rows");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto row = read_row(line, n, "similarity");
    m.values.insert(m.values.end(), row.begin(), row.end());
  }
  return m;
}

SimilarityMatrix load_similarity_file(const std::string& path,
                                      std::string label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open similarity file: " + path);
  return load_similarity(in, std::move(label));
}

void save_embeddings(std::ostream& out, const EmbeddingMatrix& m) {
  out << "rows=" << m.rows << " cols=" << m.cols << '\n';
  for (std::size_t r = 0; r < m.rows; ++r)
    write_row(out, m.values.data() + r * m.cols, m.cols);
}

void save_embeddings_file(const std::string& path, const EmbeddingMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embedding file: " + path);
  save_embeddings(out, m);
}

EmbeddingMatrix load_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty embedding file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  EmbeddingMatrix m;
  if (std::sscanf(line.c_str(), "rows=%zu cols=%zu", &m.rows, &m.cols) != 2)
    throw FormatError("bad embedding header: " + line);
  m.values.reserve(m.rows * m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    if (!std::getline(in, line))
      throw FormatError("embedding file ends after " + std::to_string(r) +
                        " of " + std::to_string(m.rows) + " rows");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto row = read_row(line, m.cols, "embedding");
    m.values.insert(m.values.end(), row.begin(), row.end());
  }
  return m;
}

EmbeddingMatrix load_embeddings_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file: " + path);
  return load_embeddings(in);
}

}  // namespace molfrag
