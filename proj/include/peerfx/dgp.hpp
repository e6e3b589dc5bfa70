#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "peerfx/dataset.hpp"
#include "peerfx/graph.hpp"
#include "peerfx/rng.hpp"

namespace peerfx {

struct StructuralParams {
  double alpha = 0.0;
  double delta = 0.5;
  double beta = 1.0;
  double gamma = 0.5;

  // |delta| < 1 and all values finite.
  void validate() const;
  Eigen::VectorXd theta(Model model = Model::full) const;
  double mu() const { return alpha / (1.0 - delta); }
  double lambda() const { return delta * beta + gamma; }
};

// cooperative:    link iff h(eta_i, eta_j) > c, h = eta_i + eta_j (+ covariate term)
// noncooperative: link iff h(eta_i) - c > u_ij and h(eta_j) - c > u_ji
enum class FormationKind { cooperative, noncooperative };
enum class EtaDistribution { normal, centered_exponential };
enum class PairShock { normal, logistic };

double default_threshold();

struct FormationConfig {
  FormationKind kind = FormationKind::cooperative;
  double threshold = default_threshold();
  EtaDistribution eta = EtaDistribution::normal;
  PairShock shock = PairShock::normal;
  // Weight on x_i (+ x_j) inside h. Zero disables covariate-driven links.
  double covariate_weight = 0.0;
};

enum class Phi { zero, linear, exp3, sine3 };

std::string_view to_string(Phi phi);
// Accepts zero, linear, exp3, sine3. Throws InvalidArgument otherwise.
Phi parse_phi(std::string_view name);
// Panel label such as "φ(η) = exp(3Φ(η))".
std::string phi_label(Phi phi);
double phi_value(Phi phi, double eta);

struct ErrorCoupling {
  Phi phi = Phi::zero;
  double noise_sd = 1.0;
};

struct NetworkDraw {
  Graph graph;
  Eigen::VectorXd eta;
};

// `x` is only read when fc.covariate_weight != 0.
NetworkDraw simulate_network(std::size_t n, const FormationConfig& fc, RngStream& rng,
                             const Eigen::VectorXd& x = {});

// i.i.d. N(1, 1).
Eigen::VectorXd draw_covariates(std::size_t n, RngStream& rng);

// eps_i = phi(eta_i) + u_i, u_i ~ N(0, noise_sd^2).
Eigen::VectorXd draw_errors(const Eigen::VectorXd& eta, const ErrorCoupling& ec, RngStream& rng);

// Solves (I - delta H) y = alpha + beta x + gamma Hx + eps.
Eigen::VectorXd simulate_outcomes(const Graph& g, const Eigen::VectorXd& x, const Eigen::VectorXd& eps,
                                  const StructuralParams& p);

// Max-norm gap between H y and its reduced-form series truncated after
// `truncation` + 1 terms. Requires no isolated agents.
double reduced_form_check(const Graph& g, const Eigen::VectorXd& x, const Eigen::VectorXd& eps,
                          const StructuralParams& p, int truncation);

struct DesignConfig {
  std::size_t groups = 250;
  std::size_t group_size = 25;
  StructuralParams params;
  FormationConfig formation;
  ErrorCoupling coupling;
};

struct GroupDraw {
  GroupData data;
  Eigen::VectorXd eta;
  Eigen::VectorXd errors;
};

GroupDraw simulate_group(std::string id, std::size_t n, const DesignConfig& cfg, RngStream& rng);

// Group g of replication r draws from RngStream::derive(seed, r, g).
Dataset simulate_dataset(const DesignConfig& cfg, std::uint64_t seed, std::uint64_t replication);

std::string group_id(std::size_t index, std::size_t group_count);

}  // namespace peerfx
