#include "peerfx/dgp.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "peerfx/error.hpp"

namespace peerfx {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream RngStream::derive(std::uint64_t root, std::uint64_t replication, std::uint64_t group) {
  std::uint64_t key = splitmix64(root);
  key = splitmix64(key ^ splitmix64(replication + 0x632be59bd9b4e019ULL));
  key = splitmix64(key ^ splitmix64(group + 0x85157af5e3a2f6c1ULL));
  return RngStream(key);
}

double RngStream::logistic() {
  double u = uniform();
  while (u <= 0.0) u = uniform();
  return std::log(u / (1.0 - u));
}

namespace {

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double draw_eta(EtaDistribution dist, RngStream& rng) {
  switch (dist) {
    case EtaDistribution::normal:
      return rng.normal();
    case EtaDistribution::centered_exponential:
      return -std::log1p(-rng.uniform()) - 1.0;
  }
  return 0.0;
}

double draw_shock(PairShock shock, RngStream& rng) {
  return shock == PairShock::normal ? rng.normal() : rng.logistic();
}

}  // namespace

void StructuralParams::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(delta) || !std::isfinite(beta) || !std::isfinite(gamma)) {
    throw InvalidArgument("structural parameters must be finite");
  }
  if (!(std::abs(delta) < 1.0)) {
    throw InvalidArgument("|delta| must be below 1, got delta = " + std::to_string(delta));
  }
}

Eigen::VectorXd StructuralParams::theta(Model model) const {
  if (model == Model::baseline) return Eigen::Vector3d(alpha, beta, gamma);
  return Eigen::Vector4d(alpha, delta, beta, gamma);
}

double default_threshold() {
  const boost::math::normal standard;
  return -std::numbers::sqrt2 * boost::math::quantile(standard, 0.25);
}

std::string_view to_string(Phi phi) {
  switch (phi) {
    case Phi::zero: return "zero";
    case Phi::linear: return "linear";
    case Phi::exp3: return "exp3";
    case Phi::sine3: return "sine3";
  }
  return "zero";
}

Phi parse_phi(std::string_view name) {
  for (Phi phi : {Phi::zero, Phi::linear, Phi::exp3, Phi::sine3}) {
    if (name == to_string(phi)) return phi;
  }
  throw InvalidArgument("unknown phi '" + std::string(name) + "'; expected one of {zero, linear, exp3, sine3}");
}

std::string phi_label(Phi phi) {
  switch (phi) {
    case Phi::zero: return "φ(η) = 0";
    case Phi::linear: return "φ(η) = η";
    case Phi::exp3: return "φ(η) = exp(3Φ(η))";
    case Phi::sine3: return "φ(η) = sin(3Φ(η))";
  }
  return {};
}

double phi_value(Phi phi, double eta) {
  switch (phi) {
    case Phi::zero: return 0.0;
    case Phi::linear: return eta;
    case Phi::exp3: return std::exp(3.0 * standard_normal_cdf(eta));
    case Phi::sine3: return std::sin(3.0 * standard_normal_cdf(eta));
  }
  return 0.0;
}

NetworkDraw simulate_network(std::size_t n, const FormationConfig& fc, RngStream& rng, const Eigen::VectorXd& x) {
  if (n < 2) throw InvalidArgument("network needs at least 2 agents");
  if (std::isnan(fc.threshold)) throw InvalidArgument("formation threshold is NaN");
  const bool uses_x = fc.covariate_weight != 0.0;
  if (uses_x && x.size() != static_cast<Eigen::Index>(n)) {
    throw InvalidArgument("covariate-dependent formation needs x of length n");
  }

  NetworkDraw out;
  out.eta.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out.eta(i) = draw_eta(fc.eta, rng);

  const auto index = [&](std::size_t i) { return out.eta(i) + (uses_x ? fc.covariate_weight * x(i) : 0.0); };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      bool link = false;
      if (fc.kind == FormationKind::cooperative) {
        link = index(i) + index(j) > fc.threshold;
      } else {
        const double u_ij = draw_shock(fc.shock, rng);
        const double u_ji = draw_shock(fc.shock, rng);
        link = index(i) - fc.threshold > u_ij && index(j) - fc.threshold > u_ji;
      }
      if (link) edges.emplace_back(i, j);
    }
  }
  out.graph = Graph::from_edges(n, edges);
  return out;
}

Eigen::VectorXd draw_covariates(std::size_t n, RngStream& rng) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = 1.0 + rng.normal();
  return x;
}

Eigen::VectorXd draw_errors(const Eigen::VectorXd& eta, const ErrorCoupling& ec, RngStream& rng) {
  Eigen::VectorXd eps(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) eps(i) = phi_value(ec.phi, eta(i)) + ec.noise_sd * rng.normal();
  return eps;
}

Eigen::VectorXd simulate_outcomes(const Graph& g, const Eigen::VectorXd& x, const Eigen::VectorXd& eps,
                                  const StructuralParams& p) {
  p.validate();
  const auto n = static_cast<Eigen::Index>(g.size());
  if (x.size() != n || eps.size() != n) throw InvalidArgument("x and eps must match graph size");
  const Eigen::MatrixXd h = row_normalize(g);
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - p.delta * h;
  const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n, p.alpha) + p.beta * x + p.gamma * (h * x) + eps;
  return system.partialPivLu().solve(rhs);
}

double reduced_form_check(const Graph& g, const Eigen::VectorXd& x, const Eigen::VectorXd& eps,
                          const StructuralParams& p, int truncation) {
  if (truncation < 0) throw InvalidArgument("truncation must be non-negative");
  if (g.has_isolated()) throw InvalidArgument("reduced form requires every agent to have a link");
  const Eigen::VectorXd y = simulate_outcomes(g, x, eps, p);
  const Eigen::VectorXd hy = apply_transition(g, y);

  const Eigen::VectorXd hx = apply_transition(g, x);
  Eigen::VectorXd series = Eigen::VectorXd::Constant(hy.size(), p.mu()) + p.beta * hx;
  Eigen::VectorXd x_term = apply_transition(g, hx);
  Eigen::VectorXd e_term = apply_transition(g, eps);
  double weight = 1.0;
  for (int s = 0; s <= truncation; ++s) {
    series += weight * (p.lambda() * x_term + e_term);
    x_term = apply_transition(g, x_term);
    e_term = apply_transition(g, e_term);
    weight *= p.delta;
  }
  return (hy - series).cwiseAbs().maxCoeff();
}

GroupDraw simulate_group(std::string id, std::size_t n, const DesignConfig& cfg, RngStream& rng) {
  GroupDraw draw;
  Eigen::VectorXd x = draw_covariates(n, rng);
  auto net = simulate_network(n, cfg.formation, rng, x);
  draw.errors = draw_errors(net.eta, cfg.coupling, rng);
  draw.eta = std::move(net.eta);
  draw.data.id = std::move(id);
  draw.data.y = simulate_outcomes(net.graph, x, draw.errors, cfg.params);
  draw.data.x = std::move(x);
  draw.data.graph = std::move(net.graph);
  return draw;
}

std::string group_id(std::size_t index, std::size_t group_count) {
  std::size_t width = 1;
  for (std::size_t c = group_count > 0 ? group_count - 1 : 0; c >= 10; c /= 10) ++width;
  std::string digits = std::to_string(index);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "g" + digits;
}

Dataset simulate_dataset(const DesignConfig& cfg, std::uint64_t seed, std::uint64_t replication) {
  if (cfg.groups == 0) throw InvalidArgument("design needs at least one group");
  cfg.params.validate();
  Dataset d;
  d.groups.reserve(cfg.groups);
  for (std::size_t g = 0; g < cfg.groups; ++g) {
    RngStream rng = RngStream::derive(seed, replication, g);
    d.groups.push_back(simulate_group(group_id(g, cfg.groups), cfg.group_size, cfg, rng).data);
  }
  return d;
}

}  // namespace peerfx
