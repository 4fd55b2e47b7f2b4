#include <numeric>

#include <Eigen/Eigenvalues>

#include "test_util.hpp"
#include "udisc/attr_graph.hpp"
#include "udisc/random.hpp"

using namespace udisc;

namespace {

Eigen::MatrixXd random_adjacency(Rng& rng, Eigen::Index m, double density) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      if (rng.uniform() < density) a(i, j) = a(j, i) = rng.uniform(0.1, 1.0);
  return a;
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
  return Eigen::MatrixXd::NullaryExpr(r, c, [&] { return rng.uniform(lo, hi); });
}

std::vector<std::string> node_names(Eigen::Index m) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < m; ++i) out.push_back("t" + std::to_string(i));
  return out;
}

// All-text node features with `n` tuples.
NodeFeatures text_features(Rng& rng, Eigen::Index m, Eigen::Index n, Eigen::Index d) {
  NodeFeatures f;
  f.nodes = node_names(m);
  f.is_text.assign(static_cast<std::size_t>(m), true);
  for (Eigen::Index k = 0; k < m; ++k) f.values.push_back(random_matrix(rng, n, d, 0.0, 1.0));
  return f;
}

}  // namespace

TEST_CASE("gcn_layer: isolated node, identity weight") {
  Eigen::MatrixXd a(1, 1);
  a << 1.0;
  Eigen::RowVectorXd h(4);
  h << 0.25, 0.0, 1.5, 3.0;
  const auto out = gcn_layer(symmetric_normalize(a), h, Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Zero(4));
  CHECK((out - h).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("gcn_layer: zero map") {
  Rng rng(1);
  const Eigen::MatrixXd a = random_adjacency(rng, 5, 0.6);
  const auto out = gcn_layer(symmetric_normalize(a), random_matrix(rng, 5, 8), Eigen::MatrixXd::Zero(8, 8),
                             Eigen::VectorXd::Zero(8));
  CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gcn_layer: two fully connected nodes average") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(2, 2);
  Eigen::MatrixXd expected_ahat(2, 2);
  expected_ahat << 0.5, 0.5, 0.5, 0.5;
  CHECK((symmetric_normalize(a) - expected_ahat).cwiseAbs().maxCoeff() <= 1e-12);
  Eigen::MatrixXd h(2, 3);
  h << 1, 2, 0, 3, 0, 5;
  const auto out = gcn_layer(symmetric_normalize(a), h, Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3));
  const Eigen::RowVectorXd avg = (h.row(0) + h.row(1)) / 2.0;
  CHECK((out.row(0) - avg).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((out.row(1) - avg).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("symmetric_normalize: spectrum inside [-1, 1]") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = static_cast<Eigen::Index>(1 + rng.below(12));
    const Eigen::MatrixXd ahat = symmetric_normalize(random_adjacency(rng, m, rng.uniform()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ahat);
    CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
    CHECK(es.eigenvalues().minCoeff() >= -1.0 - 1e-12);
  }
}

TEST_CASE("gcn_layer: output norm bounded by input norm, ||W||_2 and ||b||") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = static_cast<Eigen::Index>(1 + rng.below(8));
    const auto d = static_cast<Eigen::Index>(1 + rng.below(8));
    const Eigen::MatrixXd ahat = symmetric_normalize(random_adjacency(rng, m, 0.5));
    const Eigen::MatrixXd h = random_matrix(rng, m, d);
    const Eigen::MatrixXd w = random_matrix(rng, d, d);
    const Eigen::VectorXd b = random_matrix(rng, d, 1);
    const double w2 = Eigen::JacobiSVD<Eigen::MatrixXd>(w).singularValues()(0);
    const double bound = h.norm() * w2 + std::sqrt(static_cast<double>(m)) * b.norm();
    CHECK(gcn_layer(ahat, h, w, b).norm() <= bound + 1e-12);
  }
}

TEST_CASE("message_pass: equals the per-tuple layer, output non-negative") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.below(5)), n = 6, d = 8;
    const auto graph = AttributeGraph::from_adjacency(node_names(m), random_adjacency(rng, m, 0.5));
    const auto f = text_features(rng, m, n, d);
    GnnParams p{random_matrix(rng, d, d), random_matrix(rng, d, 1), 0};
    const auto out = message_pass(graph, f, p);
    REQUIRE(out.values.size() == static_cast<std::size_t>(m));
    const Eigen::MatrixXd ahat = graph.normalized_adjacency();
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::MatrixXd h(m, d);
      for (Eigen::Index k = 0; k < m; ++k) h.row(k) = f.values[static_cast<std::size_t>(k)].row(i);
      const auto ref = gcn_layer(ahat, h, p.weight, p.bias);
      for (Eigen::Index k = 0; k < m; ++k)
        CHECK((out.values[static_cast<std::size_t>(k)].row(i) - ref.row(k)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    for (const auto& v : out.values) CHECK(v.minCoeff() >= 0.0);
  }
}

TEST_CASE("message_pass: permutation equivariance") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.below(4)), n = 5, d = 8;
    const Eigen::MatrixXd a = random_adjacency(rng, m, 0.7);
    const auto names = node_names(m);
    const auto f = text_features(rng, m, n, d);
    GnnParams p{random_matrix(rng, d, d), random_matrix(rng, d, 1), 0};
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);

    Eigen::MatrixXd pa(m, m);
    NodeFeatures pf;
    std::vector<std::string> pnames;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) pa(i, j) = a(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
      pnames.push_back(names[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
      pf.values.push_back(f.values[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
    }
    pf.nodes = pnames;
    pf.is_text.assign(static_cast<std::size_t>(m), true);

    const auto base = message_pass(AttributeGraph::from_adjacency(names, a), f, p);
    const auto permuted = message_pass(AttributeGraph::from_adjacency(pnames, pa), pf, p);
    for (const auto& name : names) CHECK((base.at(name) - permuted.at(name)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("message_pass: no edges reduces to the dense transform") {
  Rng rng(6);
  const Eigen::Index m = 3, n = 7, d = 8;
  const auto graph = AttributeGraph::from_adjacency(node_names(m), Eigen::MatrixXd::Identity(m, m));
  const auto f = text_features(rng, m, n, d);
  GnnParams p{random_matrix(rng, d, d), random_matrix(rng, d, 1), 0};
  const auto out = message_pass(graph, f, p);
  for (Eigen::Index k = 0; k < m; ++k) {
    Eigen::MatrixXd ref = f.values[static_cast<std::size_t>(k)] * p.weight;
    ref.rowwise() += p.bias.transpose();
    ref = ref.cwiseMax(0.0);
    CHECK((out.values[static_cast<std::size_t>(k)] - ref).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("build_graph: edge weights") {
  Rng rng(7);
  std::vector<double> x(50), noise(50);
  for (auto& v : x) v = rng.uniform();
  for (auto& v : noise) v = rng.uniform();
  std::vector<double> neg(x.size());
  std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
  const auto ds = Dataset::make("d", {AttributeColumn::numeric("x", x), AttributeColumn::numeric("copy", x),
                                     AttributeColumn::numeric("neg", neg),
                                     AttributeColumn::numeric("flat", std::vector<double>(50, 3.0))});
  const auto nds = testing::normalized(ds);
  const auto g = build_graph(nds, {});
  CHECK(g.adjacency(0, 1) == doctest::Approx(1.0));
  CHECK(g.adjacency(0, 2) == doctest::Approx(1.0));
  CHECK(g.adjacency(0, 3) == 0.0);
  CHECK(g.degenerate[3]);
  CHECK(!g.degenerate[0]);
  CHECK(g.adjacency.diagonal() == Eigen::VectorXd::Ones(4));
  CHECK(g.adjacency == g.adjacency.transpose());
  CHECK(g.adjacency.allFinite());
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(g.degree[i] > 0.0);
}

TEST_CASE("build_graph: independent columns are thresholded away") {
  int zero = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    std::vector<double> a(1000), b(1000);
    for (auto& v : a) v = rng.uniform();
    for (auto& v : b) v = rng.uniform();
    const auto ds = testing::numeric_dataset({a, b});
    if (build_graph(testing::normalized(ds), {}).adjacency(0, 1) == 0.0) ++zero;
  }
  CHECK(zero == 50);
}

TEST_CASE("build_graph: text edges use mean-embedding cosine") {
  const HashedNgramEmbedder embedder(EmbedderConfig{.dim = 32});
  const auto ds = Dataset::make("d", {AttributeColumn::text("s", {"red house", "red home"}),
                                     AttributeColumn::text("u", {"red house", "red home"}),
                                     AttributeColumn::numeric("n", {1.0, 2.0})});
  const auto nds = testing::normalized(ds);
  const auto emb = embed_text_attributes(nds.dataset, embedder);
  const auto g = build_graph(nds, emb);
  CHECK(g.adjacency(0, 1) == doctest::Approx(1.0));
  CHECK(g.adjacency(0, 2) == 0.0);  // embedding norms are constant
}

TEST_CASE("AttributeGraph: validation and JSON round trip") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0.5, 0.4, 1;
  CHECK_THROWS_CODE(AttributeGraph::from_adjacency({"a", "b"}, bad), ErrorCode::InvalidArgument);
  bad << 0.9, 0.5, 0.5, 1;
  CHECK_THROWS_CODE(AttributeGraph::from_adjacency({"a", "b"}, bad), ErrorCode::InvalidArgument);
  CHECK_THROWS_CODE(AttributeGraph::from_adjacency({"a"}, bad), ErrorCode::DimensionMismatch);
  Rng rng(8);
  const auto g = AttributeGraph::from_adjacency(node_names(4), random_adjacency(rng, 4, 0.5));
  const auto back = AttributeGraph::from_json(g.to_json());
  CHECK(back.adjacency == g.adjacency);
  CHECK(back.nodes == g.nodes);
  CHECK(g.to_json().at("adjacency_list").size() == 4);
}

TEST_CASE("init_params: Glorot bound and determinism") {
  const auto a = init_params(EmbedderConfig{}, 42);
  const auto b = init_params(EmbedderConfig{}, 42);
  CHECK(a.weight == b.weight);
  CHECK(a.weight.rows() == 64);
  CHECK(a.weight.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 128.0));
  CHECK(a.bias.isZero(0.0));
  CHECK(init_params(EmbedderConfig{}, 0).weight != init_params(EmbedderConfig{}, 1).weight);
}

TEST_CASE("apply_layer: shape errors") {
  EmbeddingMatrix e{{"t"}, {Eigen::MatrixXd::Zero(3, 8)}};
  GnnParams p{Eigen::MatrixXd::Zero(4, 4), Eigen::VectorXd::Zero(4), 0};
  CHECK_THROWS_CODE(apply_layer(e, p), ErrorCode::DimensionMismatch);
}
