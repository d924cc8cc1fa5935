#include <cmath>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "molfrag/error.hpp"
#include "molfrag/fingerprint.hpp"
#include "molfrag/molgraph.hpp"
#include "molfrag/rng.hpp"
#include "molfrag/simspace.hpp"
#include "testutil.hpp"

using namespace molfrag;

namespace {

SimilarityMatrix toy_matrix(std::string label, std::vector<double> values,
                            std::size_t n) {
  SimilarityMatrix m;
  m.encoding_label = std::move(label);
  m.n = n;
  m.values = std::move(values);
  return m;
}

}  // namespace

TEST_CASE("similarity matrices are symmetric with a unit diagonal") {
  const std::vector<FeatureVector> items{
      {"a", {1, 0, 0}}, {"b", {1, 1, 0}}, {"c", {0, 0, 2}}};
  const SimilarityMatrix m = similarity_matrix(items, "feat");
  CHECK(m.encoding_label == "feat");
  REQUIRE(m.n == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(m.at(i, i) == doctest::Approx(1.0));
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(m.at(i, j) == doctest::Approx(m.at(j, i)));
  }
  CHECK(m.at(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(m.at(0, 2) == doctest::Approx(0.0));

  CHECK_THROWS_AS(similarity_matrix(std::vector<FeatureVector>{items[0]},
                                    "one"),
                  ShapeMismatch);

  Rng rng(8);
  const auto mols = testutil::random_corpus(rng, 12, 14);
  std::vector<BitFingerprint> fps;
  for (const auto& mol : mols) fps.push_back(morgan_fingerprint(mol));
  const SimilarityMatrix fm = similarity_matrix(fps, "morgan", 4);
  for (std::size_t i = 0; i < fm.n; ++i)
    CHECK(fm.at(i, i) == doctest::Approx(1.0));

  // Thread count is a throughput knob, never a result knob.
  const SimilarityMatrix fm1 = similarity_matrix(fps, "morgan", 1);
  CHECK(fm.values == fm1.values);
}

TEST_CASE("pearson identities") {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng.below(6);
    std::vector<double> v(n * n);
    for (auto& x : v) x = rng.uniform() * 2.0 - 1.0;
    const SimilarityMatrix p = toy_matrix("p", v, n);

    CHECK(pearson(p, p) == doctest::Approx(1.0).epsilon(1e-12));

    // Affine images correlate exactly, negated scale flips the sign.
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = 3.5 * v[i] - 0.25;
    CHECK(pearson(p, toy_matrix("q", w, n)) ==
          doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = -2.0 * v[i] + 1.0;
    CHECK(pearson(p, toy_matrix("q", w, n)) ==
          doctest::Approx(-1.0).epsilon(1e-9));
  }

  const SimilarityMatrix flat = toy_matrix("flat", {1, 1, 1, 1}, 2);
  const SimilarityMatrix live = toy_matrix("live", {1, 0, 0, 1}, 2);
  CHECK_THROWS_AS(pearson(flat, live), ConstantMatrix);
  CHECK_THROWS_AS(pearson(live, toy_matrix("small", {1}, 1)), ShapeMismatch);

  // With the diagonal excluded, only off-diagonal agreement matters.
  const SimilarityMatrix a = toy_matrix("a", {1, 0.2, 0.2, 1}, 2);
  const SimilarityMatrix b = toy_matrix("b", {1, 0.9, 0.9, 1}, 2);
  CHECK(pearson(a, b) > 0.9);
  CHECK_THROWS_AS(pearson(a, b, true), ConstantMatrix);
}

TEST_CASE("bias report table") {
  const std::vector<FeatureVector> one{
      {"a", {1, 0}}, {"b", {0.8, 0.6}}, {"c", {0, 1}}};
  const std::vector<FeatureVector> two{
      {"a", {2, 0}}, {"b", {1.6, 1.2}}, {"c", {0, 7}}};
  const std::vector<FeatureVector> three{
      {"a", {1, 5}}, {"b", {4, 2}}, {"c", {3, 3}}};
  const std::vector<SimilarityMatrix> mats{
      similarity_matrix(one, "one"), similarity_matrix(two, "two"),
      similarity_matrix(three, "three")};

  const BiasReport report = bias_report(mats);
  REQUIRE(report.k == 3);
  CHECK(report.labels == std::vector<std::string>{"one", "two", "three"});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(report.at(i, i) == 1.0);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(report.at(i, j) == report.at(j, i));
  }
  // Scaling every feature vector leaves cosine untouched.
  CHECK(report.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));

  std::ostringstream tsv;
  report.write_tsv(tsv);
  const std::string text = tsv.str();
  CHECK(text.find("encoding\tone\ttwo\tthree\n") == 0);
  CHECK(text.find("\n" "one\t1.000000\t") != std::string::npos);

  std::ostringstream csv;
  report.write_csv(csv);
  CHECK(csv.str().find("encoding_a,encoding_b,pearson\n") == 0);
  CHECK(csv.str().find("one,two,1") != std::string::npos);
}

TEST_CASE("embedding augmentation keeps the base bytes and tracks moments") {
  EmbeddingMatrix base;
  base.rows = 40;
  base.cols = 8;
  base.values.resize(base.rows * base.cols);
  Rng fill(77);
  for (auto& v : base.values) v = 0.3 + 0.05 * fill.normal();

  Rng rng(5);
  const EmbeddingMatrix grown = augment_embeddings(base, 500, rng);
  REQUIRE(grown.rows == 540);
  REQUIRE(grown.cols == 8);
  CHECK(std::memcmp(grown.values.data(), base.values.data(),
                    base.values.size() * sizeof(double)) == 0);

  double mean = 0.0;
  for (std::size_t i = base.values.size(); i < grown.values.size(); ++i)
    mean += grown.values[i];
  const std::size_t n_new = grown.values.size() - base.values.size();
  mean /= static_cast<double>(n_new);
  double var = 0.0;
  for (std::size_t i = base.values.size(); i < grown.values.size(); ++i)
    var += (grown.values[i] - mean) * (grown.values[i] - mean);
  var /= static_cast<double>(n_new);
  CHECK(mean == doctest::Approx(0.3).epsilon(0.05));
  CHECK(std::sqrt(var) == doctest::Approx(0.05).epsilon(0.15));

  Rng rng0(5);
  const EmbeddingMatrix same = augment_embeddings(base, 0, rng0);
  CHECK(same.rows == base.rows);
  CHECK(same.values == base.values);

  Rng rng2(5);
  const EmbeddingMatrix again = augment_embeddings(base, 500, rng2);
  CHECK(again.values == grown.values);

  CHECK_THROWS_AS(augment_embeddings(EmbeddingMatrix{}, 3, rng),
                  ShapeMismatch);
}

TEST_CASE("per-dimension augmentation follows each column") {
  EmbeddingMatrix base;
  base.rows = 200;
  base.cols = 2;
  base.values.resize(400);
  Rng fill(3);
  for (std::size_t r = 0; r < 200; ++r) {
    base.at(r, 0) = 10.0 + 0.1 * fill.normal();
    base.at(r, 1) = -4.0 + 0.2 * fill.normal();
  }
  Rng rng(6);
  const EmbeddingMatrix grown = augment_embeddings(base, 400, rng, true);
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t r = 200; r < 600; ++r) {
    m0 += grown.at(r, 0);
    m1 += grown.at(r, 1);
  }
  CHECK(m0 / 400 == doctest::Approx(10.0).epsilon(0.01));
  CHECK(m1 / 400 == doctest::Approx(-4.0).epsilon(0.01));
}

TEST_CASE("weight drift formulas") {
  EmbeddingMatrix w;
  w.rows = 3;
  w.cols = 4;
  w.values = {1, 2, 0, 5, 3, -1, 0, 2, -2, 4, 1, 0};

  const auto [dm_same, dd_same] = weight_drift(w, w);
  CHECK(dm_same == doctest::Approx(0.0));
  CHECK(dd_same == doctest::Approx(0.0));

  EmbeddingMatrix doubled = w;
  for (auto& v : doubled.values) v *= 2.0;
  const auto [dm_scale, dd_scale] = weight_drift(w, doubled);
  double norm_sum = 0.0;
  for (std::size_t c = 0; c < w.cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < w.rows; ++r) s += w.at(r, c) * w.at(r, c);
    norm_sum += std::sqrt(s);
  }
  CHECK(dm_scale == doctest::Approx(norm_sum / w.cols).epsilon(1e-9));
  CHECK(dd_scale == doctest::Approx(0.0).epsilon(1e-12));

  EmbeddingMatrix negated = w;
  for (auto& v : negated.values) v = -v;
  const auto [dm_flip, dd_flip] = weight_drift(w, negated);
  CHECK(dm_flip == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(dd_flip == doctest::Approx(2.0).epsilon(1e-12));

  EmbeddingMatrix short_one;
  short_one.rows = 2;
  short_one.cols = 4;
  short_one.values.resize(8, 1.0);
  CHECK_THROWS_AS(weight_drift(w, short_one), ShapeMismatch);

  EmbeddingMatrix with_zero = w;
  with_zero.at(0, 2) = 0;
  with_zero.at(1, 2) = 0;
  with_zero.at(2, 2) = 0;
  CHECK_THROWS_AS(weight_drift(with_zero, w), ZeroColumn);
}

TEST_CASE("similarity and embedding files round trip") {
  const SimilarityMatrix m =
      toy_matrix("enc", {1.0, 0.25, 0.25, 1.0}, 2);
  std::ostringstream out;
  save_similarity(out, m);
  std::istringstream in(out.str());
  const SimilarityMatrix back = load_similarity(in, "enc");
  CHECK(back.n == 2);
  CHECK(back.values == m.values);
  CHECK(back.encoding_label == "enc");

  EmbeddingMatrix e;
  e.rows = 2;
  e.cols = 3;
  e.values = {0.5, -1.25, 3.0, 2.0, 0.0, -7.5};
  std::ostringstream eo;
  save_embeddings(eo, e);
  std::istringstream ei(eo.str());
  const EmbeddingMatrix eback = load_embeddings(ei);
  CHECK(eback.rows == 2);
  CHECK(eback.cols == 3);
  CHECK(eback.values == e.values);

  const auto load_sim = [](const std::string& text) {
    std::istringstream s(text);
    return load_similarity(s);
  };
  CHECK_THROWS_AS(load_sim("nope\n"), FormatError);
  CHECK_THROWS_AS(load_sim("n=2\n1 0\n"), FormatError);
}
