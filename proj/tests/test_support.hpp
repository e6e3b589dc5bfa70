#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peerfx/dataset.hpp"
#include "peerfx/graph.hpp"

namespace peerfx::testing {

inline Graph random_graph(std::mt19937_64& rng, std::size_t n, double p) {
  std::bernoulli_distribution link(p);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (link(rng)) edges.emplace_back(i, j);
    }
  }
  return Graph::from_edges(n, edges);
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = z(rng);
  return v;
}

inline Graph path3() {
  const std::vector<Edge> e = {{0, 1}, {1, 2}};
  return Graph::from_edges(3, e);
}

inline Graph complete(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
  }
  return Graph::from_edges(n, e);
}

// Row-normalization of the (n-1)-agent graph with agent i deleted.
inline Eigen::MatrixXd normalize_without(const Graph& g, std::size_t i) {
  const Eigen::Index n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd a(n - 1, n - 1);
  const Eigen::MatrixXd full = g.adjacency();
  for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
    if (r == static_cast<Eigen::Index>(i)) continue;
    for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
      if (c == static_cast<Eigen::Index>(i)) continue;
      a(rr, cc++) = full(r, c);
    }
    ++rr;
  }
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double deg = a.row(r).sum();
    if (deg > 0) a.row(r) /= deg;
  }
  return a;
}

// Independent oracle for Q_s x: power the reduced (n-1)-agent transition
// matrix and average its rows against x with entry i dropped.
inline Eigen::VectorXd q_oracle(const Graph& g, const Eigen::VectorXd& x, int steps) {
  const Eigen::Index n = static_cast<Eigen::Index>(g.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::MatrixXd h = normalize_without(g, static_cast<std::size_t>(i));
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n - 1, n - 1);
    for (int s = 0; s < steps; ++s) power = power * h;
    Eigen::VectorXd rest(n - 1);
    for (Eigen::Index j = 0, jj = 0; j < n; ++j) {
      if (j != i) rest(jj++) = x(j);
    }
    out(i) = (power * rest).sum() / static_cast<double>(n - 1);
  }
  return out;
}

}  // namespace peerfx::testing
