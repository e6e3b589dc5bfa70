#include <doctest.h>

#include <random>

#include "peerfx/error.hpp"
#include "peerfx/instruments.hpp"
#include "test_support.hpp"

using namespace peerfx;
using peerfx::testing::complete;
using peerfx::testing::path3;
using peerfx::testing::q_oracle;
using peerfx::testing::random_graph;
using peerfx::testing::random_vector;

TEST_CASE("q_weights_reference on the 3-path") {
  const Graph p = path3();
  const Eigen::MatrixXd q1 = q_weights_reference(p, 1);
  CHECK(q1.row(0).isApprox(Eigen::RowVector3d(0, 0.5, 0.5)));
  CHECK(q1.row(1).isZero());
  CHECK(q1.row(2).isApprox(Eigen::RowVector3d(0.5, 0.5, 0)));

  const Eigen::MatrixXd q2 = q_weights_reference(p, 2);
  CHECK(q2.row(0).isApprox(Eigen::RowVector3d(0, 0.5, 0.5)));

  CHECK_THROWS_AS(q_weights_reference(p, 0), InvalidArgument);
}

TEST_CASE("q_transform examples") {
  const Graph p = path3();
  const Eigen::Vector3d x(1, 2, 3);
  const Eigen::VectorXd q = q_transform(p, x, 1);
  CHECK(q(0) == doctest::Approx(2.5));
  CHECK(q(1) == 0.0);
  CHECK(q(2) == doctest::Approx(1.5));

  const Graph empty = Graph::from_edges(5, std::vector<Edge>{});
  CHECK(q_transform(empty, Eigen::VectorXd::LinSpaced(5, -1.0, 2.0), 3).isZero());
  CHECK(q_transform(complete(5), Eigen::VectorXd::Zero(5), 2).isZero());
  CHECK_THROWS_AS(q_transform(p, Eigen::VectorXd::Zero(4), 1), InvalidArgument);
}

TEST_CASE("q_transform matches the dense reference and an independent oracle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const Graph g = random_graph(rng, n, 0.3);
    const Eigen::VectorXd x = random_vector(rng, n);
    const Eigen::MatrixXd all = q_transforms(g, x, 4);
    for (int s = 1; s <= 4; ++s) {
      const Eigen::MatrixXd q = q_weights_reference(g, s);
      CHECK((q * x - all.col(s - 1)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((q_oracle(g, x, s) - all.col(s - 1)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(q.diagonal().isZero());
      CHECK(q.minCoeff() >= 0.0);
      CHECK(q.maxCoeff() <= 1.0);
      // Row i sums to the share of agents with a link surviving i's removal.
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t active = 0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k != i && g.degree(k) > (g.linked(k, i) ? 1u : 0u)) ++active;
        }
        CHECK(q.row(i).sum() == doctest::Approx(static_cast<double>(active) / (n - 1)));
      }
    }
  }
}

TEST_CASE("q_transform is linear in x") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = random_graph(rng, 10, 0.3);
    const Eigen::VectorXd x = random_vector(rng, 10);
    const Eigen::VectorXd xt = random_vector(rng, 10);
    const double a = 1.7, b = -0.4;
    const Eigen::VectorXd lhs = q_transform(g, a * x + b * xt, 3);
    const Eigen::VectorXd rhs = a * q_transform(g, x, 3) + b * q_transform(g, xt, 3);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("second_moment_instruments") {
  const Graph p = path3();
  const Eigen::Vector3d x(1, 2, 3);
  CHECK(second_moment_instruments(p, x, 1)(0) == doctest::Approx(13.0));
  CHECK(second_moment_instruments(Graph::from_edges(3, std::vector<Edge>{}), x, 2).isZero());
  CHECK(second_moment_instruments(p, Eigen::Vector3d::Zero(), 2).isZero());

  std::mt19937_64 rng(9);
  const Graph g = random_graph(rng, 8, 0.4);
  const Eigen::VectorXd xv = random_vector(rng, 8);
  const Eigen::VectorXd m = second_moment_instruments(g, xv, 3);
  for (std::size_t i = 0; i < 8; ++i) {
    const Eigen::MatrixXd hi = leave_one_out(g, i);
    const double expected = (hi * xv).dot(hi * hi * hi * xv);
    CHECK(m(static_cast<Eigen::Index>(i)) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("build_instrument_matrix layouts") {
  std::mt19937_64 rng(4);
  GroupData d;
  d.id = "a";
  d.graph = random_graph(rng, 12, 0.3);
  d.x = random_vector(rng, 12);
  d.y = random_vector(rng, 12);

  const auto e = build_instrument_matrix(d, {InstrumentMode::E, 4, false}, Model::full);
  CHECK(e.columns.cols() == 6);
  CHECK(e.labels == std::vector<std::string>{"1", "x", "Q1x", "Q2x", "Q3x", "Q4x"});
  CHECK(e.columns.col(0).isOnes());
  CHECK(e.columns.col(1) == d.x);
  CHECK((e.columns.col(3) - q_transform(d.graph, d.x, 2)).isZero());

  const auto x = build_instrument_matrix(d, {InstrumentMode::X, 4, false}, Model::full);
  CHECK(x.labels == std::vector<std::string>{"1", "x", "Hx", "H^2x", "H^3x", "H^4x"});
  const Eigen::MatrixXd h = row_normalize(d.graph);
  CHECK((x.columns.col(4) - h * h * h * d.x).cwiseAbs().maxCoeff() < 1e-13);

  const auto base = build_instrument_matrix(d, {InstrumentMode::X, 1, false}, Model::baseline);
  CHECK(base.columns.cols() == 3);
  CHECK(base.labels == std::vector<std::string>{"1", "x", "Hx"});

  const auto sm = build_instrument_matrix(d, {InstrumentMode::E, 2, true}, Model::full);
  CHECK(sm.columns.cols() == 6);
  CHECK((sm.columns.col(5) - second_moment_instruments(d.graph, d.x, 2)).isZero());
}

TEST_CASE("build_instrument_matrix rejects underidentified specs") {
  GroupData d;
  d.id = "a";
  d.graph = path3();
  d.x = Eigen::Vector3d(1, 2, 3);
  d.y = Eigen::Vector3d(0, 0, 0);
  CHECK_THROWS_AS(build_instrument_matrix(d, {InstrumentMode::E, 1, false}, Model::full), InvalidArgument);
  CHECK_NOTHROW(build_instrument_matrix(d, {InstrumentMode::E, 1, false}, Model::baseline));
  CHECK_THROWS_AS(build_instrument_matrix(d, {InstrumentMode::X, 4, true}, Model::full), InvalidArgument);
}

TEST_CASE("empty network gives zero leave-out columns") {
  GroupData d;
  d.id = "a";
  d.graph = Graph::from_edges(6, std::vector<Edge>{});
  d.x = Eigen::VectorXd::LinSpaced(6, 0, 1);
  d.y = Eigen::VectorXd::Zero(6);
  const auto z = build_instrument_matrix(d, {InstrumentMode::E, 4, false}, Model::full);
  CHECK(z.columns.rightCols(4).isZero());
}
