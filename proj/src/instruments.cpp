#include "peerfx/instruments.hpp"

#include <string>

#include "peerfx/error.hpp"

namespace peerfx {

namespace {

void require_steps(int steps) {
  if (steps < 1) throw InvalidArgument("step count must be at least 1, got " + std::to_string(steps));
}

void require_length(const Graph& g, const Eigen::VectorXd& x) {
  if (x.size() != static_cast<Eigen::Index>(g.size())) {
    throw InvalidArgument("covariate length " + std::to_string(x.size()) +
                          " does not match graph size " + std::to_string(g.size()));
  }
}

}  // namespace

void InstrumentSpec::validate(Model model) const {
  require_steps(max_step);
  if (include_second_moments && mode == InstrumentMode::X) {
    throw InvalidArgument("second-moment instruments are only defined for leave-own-out (mode E) instruments");
  }
  const int needed = model == Model::full ? 2 : 1;
  if (max_step < needed) {
    throw InvalidArgument("max_step " + std::to_string(max_step) + " leaves " +
                          std::to_string(2 + max_step) + " instruments for " +
                          std::to_string(model == Model::full ? 4 : 3) +
                          " parameters; the full model needs max_step >= 2");
  }
}

std::string InstrumentSpec::name() const {
  return mode == InstrumentMode::E ? "TSLS-E" : "TSLS-X";
}

Eigen::MatrixXd q_weights_reference(const Graph& g, int steps) {
  require_steps(steps);
  const std::size_t n = g.size();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  if (n < 2) return q;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::MatrixXd hi = leave_one_out(g, i);
    Eigen::MatrixXd power = hi;
    for (int s = 1; s < steps; ++s) power = power * hi;
    for (std::size_t ip = 0; ip < n; ++ip) {
      if (ip != i) q.row(i) += power.row(ip);
    }
  }
  return q / static_cast<double>(n - 1);
}

Eigen::MatrixXd q_transforms(const Graph& g, const Eigen::VectorXd& x, int max_step) {
  require_steps(max_step);
  require_length(g, x);
  const std::size_t n = g.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, max_step);
  if (n < 2) return out;
  const double scale = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd w = x;
    for (int s = 0; s < max_step; ++s) {
      w = apply_leave_one_out(g, i, w);
      out(i, s) = w.sum() * scale;
    }
  }
  return out;
}

Eigen::VectorXd q_transform(const Graph& g, const Eigen::VectorXd& x, int steps) {
  return q_transforms(g, x, steps).col(steps - 1);
}

Eigen::VectorXd second_moment_instruments(const Graph& g, const Eigen::VectorXd& x, int steps) {
  require_steps(steps);
  require_length(g, x);
  const std::size_t n = g.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd first = apply_leave_one_out(g, i, x);
    Eigen::VectorXd w = first;
    for (int s = 1; s < steps; ++s) w = apply_leave_one_out(g, i, w);
    out(i) = first.dot(w);
  }
  return out;
}

InstrumentMatrix build_instrument_matrix(const GroupData& d, const InstrumentSpec& spec, Model model) {
  spec.validate(model);
  d.validate();
  const auto n = static_cast<Eigen::Index>(d.size());
  const int steps = spec.max_step;
  const bool moments = spec.include_second_moments;
  InstrumentMatrix z;
  z.columns.resize(n, 2 + steps * (moments ? 2 : 1));
  z.columns.col(0).setOnes();
  z.columns.col(1) = d.x;
  z.labels = {"1", "x"};

  if (spec.mode == InstrumentMode::X) {
    Eigen::VectorXd w = d.x;
    for (int s = 1; s <= steps; ++s) {
      w = apply_transition(d.graph, w);
      z.columns.col(1 + s) = w;
      z.labels.push_back(s == 1 ? "Hx" : "H^" + std::to_string(s) + "x");
    }
    return z;
  }

  z.columns.middleCols(2, steps) = q_transforms(d.graph, d.x, steps);
  for (int s = 1; s <= steps; ++s) z.labels.push_back("Q" + std::to_string(s) + "x");
  if (moments) {
    for (int s = 1; s <= steps; ++s) {
      z.columns.col(1 + steps + s) = second_moment_instruments(d.graph, d.x, s);
      z.labels.push_back("xH'H^" + std::to_string(s) + "x");
    }
  }
  return z;
}

}  // namespace peerfx
