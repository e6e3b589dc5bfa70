#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peerfx/dataset.hpp"
#include "peerfx/graph.hpp"

namespace peerfx {

// E: leave-own-out averages Q_s x, valid when links are self-selected.
// X: powers H^s x, valid only when links are exogenous.
enum class InstrumentMode { E, X };

struct InstrumentSpec {
  InstrumentMode mode = InstrumentMode::E;
  int max_step = 4;
  // Adds x' H_i' H_i^s x for s = 1..max_step. Mode E only.
  bool include_second_moments = false;

  // Throws InvalidArgument when the column count cannot identify `model`.
  void validate(Model model) const;
  std::string name() const;
};

struct InstrumentMatrix {
  Eigen::MatrixXd columns;
  std::vector<std::string> labels;
};

// Dense reference for Q_s: average over starting agents of the s-step
// transition probabilities of H_i, one explicit matrix power per agent.
// Only meant as an oracle for small graphs.
Eigen::MatrixXd q_weights_reference(const Graph& g, int steps);

// Entry i is 1' H_i^s x / (n - 1), via repeated leave-one-out products.
Eigen::VectorXd q_transform(const Graph& g, const Eigen::VectorXd& x, int steps);

// Column s-1 holds q_transform(g, x, s) for s = 1..max_step, in one sweep.
Eigen::MatrixXd q_transforms(const Graph& g, const Eigen::VectorXd& x, int max_step);

// Entry i is x' H_i' H_i^s x.
Eigen::VectorXd second_moment_instruments(const Graph& g, const Eigen::VectorXd& x, int steps);

// Columns (1, x, Q_1x, ..., Q_Sx [, second moments]) in mode E,
// (1, x, Hx, ..., H^Sx) in mode X.
InstrumentMatrix build_instrument_matrix(const GroupData& d, const InstrumentSpec& spec,
                                         Model model = Model::full);

}  // namespace peerfx
