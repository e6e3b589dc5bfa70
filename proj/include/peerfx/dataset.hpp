#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peerfx/graph.hpp"

namespace peerfx {

// One network with its covariate and outcome.
struct GroupData {
  std::string id;
  Graph graph;
  Eigen::VectorXd x;
  Eigen::VectorXd y;

  std::size_t size() const { return graph.size(); }
  // Throws InvalidArgument when x or y do not match the graph size.
  void validate() const;
};

// Independent networks pooled for estimation.
struct Dataset {
  std::vector<GroupData> groups;

  std::size_t group_count() const { return groups.size(); }
  std::size_t observation_count() const;
  // Requires at least one group, consistent sizes, and unique group ids.
  void validate() const;
  // Content hash over ids, links, x and y (bitwise).
  std::uint64_t signature() const;
};

enum class Model { baseline, full };

// Regressors are (1, x, Hx) for the baseline model and (1, Hy, x, Hx) for
// the full model.
struct ModelSpec {
  Model model = Model::full;

  std::size_t parameter_count() const { return model == Model::full ? 4 : 3; }
  std::vector<std::string> labels() const;
  Eigen::MatrixXd regressors(const GroupData& d) const;
};

}  // namespace peerfx
