#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace peerfx {

using Edge = std::pair<std::size_t, std::size_t>;

// Undirected, unweighted network without self-loops. Immutable once built.
//
// Storage keeps both a dense bitmap (for O(1) link queries) and sorted
// neighbor lists (for transition products in O(edges)).
class Graph {
 public:
  Graph() = default;

  // Rejects self-loops and out-of-range endpoints; duplicate edges, in
  // either orientation, collapse to a single link.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges);

  // Builds from a dense 0/1 matrix. Must be symmetric with zero diagonal.
  static Graph from_adjacency(const Eigen::MatrixXd& adjacency);

  std::size_t size() const { return n_; }
  std::size_t edge_count() const { return edge_count_; }
  bool linked(std::size_t i, std::size_t j) const { return dense_[i * n_ + j] != 0; }
  std::size_t degree(std::size_t i) const { return neighbors_[i].size(); }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_[i]; }
  bool has_isolated() const;

  // Upper-triangular edge list (i < j), ordered by (i, j).
  std::vector<Edge> edges() const;

  Eigen::MatrixXd adjacency() const;

  // Graph with agents relabeled so that new agent perm[k] is old agent k.
  Graph permuted(std::span<const std::size_t> perm) const;

  bool operator==(const Graph&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t edge_count_ = 0;
  std::vector<unsigned char> dense_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

// Row-normalized adjacency H. Isolated agents keep a zero row.
Eigen::MatrixXd row_normalize(const Graph& g);

// Transition matrix H_i of the subnetwork without agent i's links, kept at
// full size with row and column i zero. Degrees are recomputed on that
// subnetwork, so this differs from blanking row/column i of row_normalize(g).
Eigen::MatrixXd leave_one_out(const Graph& g, std::size_t i);

// H w without forming H.
Eigen::VectorXd apply_transition(const Graph& g, const Eigen::VectorXd& w);

// H_i w without forming H_i. Entry i of the result is zero and w(i) is
// never read.
Eigen::VectorXd apply_leave_one_out(const Graph& g, std::size_t i, const Eigen::VectorXd& w);

}  // namespace peerfx
