#include "peerfx/graph.hpp"

#include <algorithm>
#include <string>

#include "peerfx/error.hpp"

namespace peerfx {

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges) {
  Graph g;
  g.n_ = n;
  g.dense_.assign(n * n, 0);
  g.neighbors_.resize(n);
  for (const auto& [i, j] : edges) {
    if (i >= n || j >= n) {
      throw InvalidArgument("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") out of range for " + std::to_string(n) + " agents");
    }
    if (i == j) {
      throw InvalidArgument("self-loop at agent " + std::to_string(i));
    }
    if (g.dense_[i * n + j]) continue;
    g.dense_[i * n + j] = 1;
    g.dense_[j * n + i] = 1;
    g.neighbors_[i].push_back(j);
    g.neighbors_[j].push_back(i);
    ++g.edge_count_;
  }
  for (auto& nb : g.neighbors_) std::sort(nb.begin(), nb.end());
  return g;
}

Graph Graph::from_adjacency(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw InvalidArgument("adjacency matrix must be square");
  }
  const auto n = static_cast<std::size_t>(adjacency.rows());
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = adjacency(i, j);
      if (a != 0.0 && a != 1.0) throw InvalidArgument("adjacency entries must be 0 or 1");
      if (a != adjacency(j, i)) throw InvalidArgument("adjacency matrix must be symmetric");
      if (a == 1.0 && j > i) edges.emplace_back(i, j);
    }
    if (adjacency(i, i) != 0.0) throw InvalidArgument("adjacency diagonal must be zero");
  }
  return from_edges(n, edges);
}

bool Graph::has_isolated() const {
  return std::any_of(neighbors_.begin(), neighbors_.end(),
                     [](const auto& nb) { return nb.empty(); });
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j : neighbors_[i]) {
      if (j > i) out.emplace_back(i, j);
    }
  }
  return out;
}

Eigen::MatrixXd Graph::adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j : neighbors_[i]) a(i, j) = 1.0;
  }
  return a;
}

Graph Graph::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != n_) throw InvalidArgument("permutation length must equal graph size");
  std::vector<Edge> relabeled;
  relabeled.reserve(edge_count_);
  for (const auto& [i, j] : edges()) relabeled.emplace_back(perm[i], perm[j]);
  return from_edges(n_, relabeled);
}

Eigen::MatrixXd row_normalize(const Graph& g) {
  const std::size_t n = g.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nb = g.neighbors(i);
    if (nb.empty()) continue;
    const double w = 1.0 / static_cast<double>(nb.size());
    for (std::size_t j : nb) h(i, j) = w;
  }
  return h;
}

Eigen::MatrixXd leave_one_out(const Graph& g, std::size_t i) {
  const std::size_t n = g.size();
  if (i >= n) throw InvalidArgument("agent index " + std::to_string(i) + " out of range");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == i) continue;
    const std::size_t deg = g.degree(k) - (g.linked(k, i) ? 1 : 0);
    if (deg == 0) continue;
    const double w = 1.0 / static_cast<double>(deg);
    for (std::size_t j : g.neighbors(k)) {
      if (j != i) h(k, j) = w;
    }
  }
  return h;
}

Eigen::VectorXd apply_transition(const Graph& g, const Eigen::VectorXd& w) {
  const std::size_t n = g.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& nb = g.neighbors(k);
    if (nb.empty()) continue;
    double acc = 0.0;
    for (std::size_t j : nb) acc += w(j);
    out(k) = acc / static_cast<double>(nb.size());
  }
  return out;
}

Eigen::VectorXd apply_leave_one_out(const Graph& g, std::size_t i, const Eigen::VectorXd& w) {
  const std::size_t n = g.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == i) continue;
    double acc = 0.0;
    std::size_t deg = 0;
    for (std::size_t j : g.neighbors(k)) {
      if (j == i) continue;
      acc += w(j);
      ++deg;
    }
    if (deg > 0) out(k) = acc / static_cast<double>(deg);
  }
  return out;
}

}  // namespace peerfx
