#include "peerfx/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "peerfx/error.hpp"

namespace peerfx {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<std::size_t> ordered_by_id(std::span<const MomentBlock> blocks) {
  std::vector<std::size_t> order(blocks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return blocks[a].id < blocks[b].id; });
  return order;
}

// Labels whose weight in `direction` is non-negligible.
std::string name_direction(const VectorXd& direction, const std::vector<std::string>& labels) {
  std::ostringstream os;
  bool first = true;
  const double cutoff = 0.1 * direction.cwiseAbs().maxCoeff();
  for (Index k = 0; k < direction.size(); ++k) {
    if (std::abs(direction(k)) < cutoff) continue;
    os << (first ? "" : ", ")
       << (static_cast<std::size_t>(k) < labels.size() ? labels[k] : "column " + std::to_string(k));
    first = false;
  }
  return os.str();
}

double reciprocal_condition(const VectorXd& singular_values) {
  const double hi = singular_values.maxCoeff();
  const double lo = singular_values.minCoeff();
  return hi > 0.0 ? lo / hi : 0.0;
}

MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

double normal_two_sided_p(double t) { return std::erfc(std::abs(t) / std::sqrt(2.0)); }

}  // namespace

std::optional<std::size_t> FitResult::index_of(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels.begin());
}

Eigen::MatrixXd cluster_variance(const MatrixXd& s_n, const MatrixXd& w_n, const MatrixXd& omega_n) {
  const MatrixXd ws = w_n * s_n;
  const MatrixXd bread = symmetrize(s_n.transpose() * ws);
  const Eigen::LDLT<MatrixXd> ldlt(bread);
  if (ldlt.info() != Eigen::Success) throw NumericalError("sandwich bread S'WS is not invertible");
  const MatrixXd bread_inv = ldlt.solve(MatrixXd::Identity(bread.rows(), bread.cols()));
  const MatrixXd meat = ws.transpose() * omega_n * ws;
  return symmetrize(bread_inv * meat * bread_inv);
}

FitResult tsls_fit_blocks(std::span<const MomentBlock> blocks, std::vector<std::string> labels,
                          std::vector<std::string> instrument_labels) {
  if (blocks.empty()) throw InvalidArgument("no groups to fit");
  const Index p = blocks.front().regressors.cols();
  const Index k = blocks.front().instruments.cols();
  if (static_cast<Index>(labels.size()) != p) throw InvalidArgument("label count does not match regressor count");
  if (k < p) {
    throw InvalidArgument(std::to_string(k) + " instruments cannot identify " + std::to_string(p) + " parameters");
  }
  for (const auto& b : blocks) {
    const Index n = b.outcome.size();
    if (b.regressors.cols() != p || b.instruments.cols() != k || b.regressors.rows() != n ||
        b.instruments.rows() != n) {
      throw InvalidArgument("group '" + b.id + "' has inconsistent block dimensions");
    }
  }
  if (instrument_labels.empty()) {
    for (Index c = 0; c < k; ++c) instrument_labels.push_back("z" + std::to_string(c));
  }

  const auto order = ordered_by_id(blocks);
  MatrixXd zz = MatrixXd::Zero(k, k);
  MatrixXd zx = MatrixXd::Zero(k, p);
  VectorXd zy = VectorXd::Zero(k);
  std::size_t observations = 0;
  for (std::size_t g : order) {
    const auto& b = blocks[g];
    zz.noalias() += b.instruments.transpose() * b.instruments;
    zx.noalias() += b.instruments.transpose() * b.regressors;
    zy.noalias() += b.instruments.transpose() * b.outcome;
    observations += static_cast<std::size_t>(b.outcome.size());
  }
  zz = symmetrize(zz);

  const Eigen::SelfAdjointEigenSolver<MatrixXd> zz_eig(zz);
  const VectorXd zz_vals = zz_eig.eigenvalues().cwiseMax(0.0);
  if (reciprocal_condition(zz_vals) < kSingularRcond) {
    throw NumericalError("instrument cross-product is singular; offending columns: " +
                         name_direction(zz_eig.eigenvectors().col(0), instrument_labels));
  }

  // With Z'Z = LL', the 2SLS problem is least squares of L^{-1}Z'y on L^{-1}Z'X.
  const Eigen::LLT<MatrixXd> llt(zz);
  if (llt.info() != Eigen::Success) throw NumericalError("instrument cross-product is not positive definite");
  const MatrixXd a = llt.matrixL().solve(zx);
  const VectorXd rhs = llt.matrixL().solve(zy);

  const Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinV);
  const double rc = reciprocal_condition(svd.singularValues());
  if (rc * rc < kSingularRcond) {
    throw NumericalError("parameters not identified; instruments do not separate regressors: " +
                         name_direction(svd.matrixV().col(p - 1), labels));
  }

  FitResult fit;
  fit.theta = a.colPivHouseholderQr().solve(rhs);
  fit.labels = std::move(labels);
  fit.instrument_labels = std::move(instrument_labels);
  fit.instrument_count = static_cast<std::size_t>(k);
  fit.observations = observations;
  fit.groups = blocks.size();

  fit.residuals.resize(blocks.size());
  for (std::size_t g = 0; g < blocks.size(); ++g) {
    fit.residuals[g] = blocks[g].outcome - blocks[g].regressors * fit.theta;
  }
  MatrixXd omega = MatrixXd::Zero(k, k);
  for (std::size_t g : order) {
    const VectorXd ze = blocks[g].instruments.transpose() * fit.residuals[g];
    omega.noalias() += ze * ze.transpose();
  }

  fit.s_n = zx;
  fit.w_n = symmetrize(llt.solve(MatrixXd::Identity(k, k)));
  fit.omega_n = omega;
  fit.cov = cluster_variance(fit.s_n, fit.w_n, fit.omega_n);
  fit.std_errors = fit.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return fit;
}

std::vector<MomentBlock> moment_blocks(const Dataset& d, const ModelSpec& mspec, const InstrumentSpec& ispec) {
  d.validate();
  ispec.validate(mspec.model);
  std::vector<MomentBlock> blocks;
  blocks.reserve(d.groups.size());
  for (const auto& g : d.groups) {
    auto z = build_instrument_matrix(g, ispec, mspec.model);
    blocks.push_back({g.id, mspec.regressors(g), std::move(z.columns), g.y});
  }
  return blocks;
}

FitResult tsls_fit(const Dataset& d, const ModelSpec& mspec, const InstrumentSpec& ispec) {
  const auto blocks = moment_blocks(d, mspec, ispec);
  const GroupData& first = d.groups.front();
  auto labels = build_instrument_matrix(first, ispec, mspec.model).labels;
  FitResult fit = tsls_fit_blocks(blocks, mspec.labels(), std::move(labels));
  fit.dataset_signature = d.signature();
  fit.estimator = ispec.name();
  return fit;
}

TStatistics t_statistics(const FitResult& fit, const VectorXd& theta0, double critical) {
  const Index p = fit.theta.size();
  if (theta0.size() != p) throw InvalidArgument("null vector length does not match parameter count");
  TStatistics out;
  out.t.resize(p);
  out.p_values.resize(p);
  out.reject.resize(static_cast<std::size_t>(p));
  for (Index k = 0; k < p; ++k) {
    const double var = fit.cov(k, k);
    if (!(var > 0.0) || !std::isfinite(var)) {
      const std::string name = static_cast<std::size_t>(k) < fit.labels.size() ? fit.labels[k] : std::to_string(k);
      throw NumericalError("t-statistic undefined for '" + name + "': variance is not positive");
    }
    out.t(k) = (fit.theta(k) - theta0(k)) / std::sqrt(var);
    out.p_values(k) = normal_two_sided_p(out.t(k));
    out.reject[static_cast<std::size_t>(k)] = std::abs(out.t(k)) > critical;
  }
  return out;
}

TestResult hausman_test(const FitResult& fit_e, const FitResult& fit_x, std::vector<std::string> coords) {
  if (fit_e.dataset_signature != fit_x.dataset_signature || fit_e.observations != fit_x.observations) {
    throw InvalidArgument("Hausman test requires both fits on the same dataset");
  }
  if (fit_e.labels != fit_x.labels) throw InvalidArgument("Hausman test requires both fits of the same model");
  if (coords.empty()) {
    if (fit_e.index_of("delta")) coords = {"delta", "gamma"};
    else coords = {"gamma"};
  }
  const auto m = static_cast<Index>(coords.size());
  std::vector<Index> idx;
  for (const auto& c : coords) {
    const auto k = fit_e.index_of(c);
    if (!k) throw InvalidArgument("unknown coordinate '" + c + "'");
    idx.push_back(static_cast<Index>(*k));
  }
  VectorXd diff(m);
  MatrixXd v(m, m);
  for (Index a = 0; a < m; ++a) {
    diff(a) = fit_x.theta(idx[a]) - fit_e.theta(idx[a]);
    for (Index b = 0; b < m; ++b) v(a, b) = fit_x.cov(idx[a], idx[b]) + fit_e.cov(idx[a], idx[b]);
  }
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrize(v));
  const VectorXd vals = eig.eigenvalues();
  const double tol = std::max(vals.cwiseAbs().maxCoeff(), 0.0) * static_cast<double>(m) * 1e-12;

  TestResult out;
  const VectorXd proj = eig.eigenvectors().transpose() * diff;
  for (Index a = 0; a < m; ++a) {
    if (vals(a) > tol && vals(a) > 0.0) {
      out.statistic += proj(a) * proj(a) / vals(a);
      ++out.dof;
    }
  }
  if (out.dof == 0) {
    out.statistic = 0.0;
    out.p_value = 1.0;
    return out;
  }
  const boost::math::chi_squared dist(static_cast<double>(out.dof));
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

Diagnostics diagnostics(const Dataset& d, const ModelSpec& mspec, const InstrumentSpec& ispec) {
  const auto blocks = moment_blocks(d, mspec, ispec);
  const auto labels = build_instrument_matrix(d.groups.front(), ispec, mspec.model).labels;
  const Index p = static_cast<Index>(mspec.parameter_count());
  const Index k = blocks.front().instruments.cols();
  const double n = static_cast<double>(d.observation_count());

  MatrixXd zz = MatrixXd::Zero(k, k);
  MatrixXd zx = MatrixXd::Zero(k, p);
  VectorXd zy = VectorXd::Zero(k);
  std::size_t max_size = 0;
  for (const auto& b : blocks) {
    zz.noalias() += b.instruments.transpose() * b.instruments;
    zx.noalias() += b.instruments.transpose() * b.regressors;
    zy.noalias() += b.instruments.transpose() * b.outcome;
    max_size = std::max<std::size_t>(max_size, static_cast<std::size_t>(b.outcome.size()));
  }
  zz = symmetrize(zz);

  Diagnostics diag;
  const auto finite_cond = [](double rc) {
    return 1.0 / std::max(rc, std::numeric_limits<double>::epsilon() * 1e-3);
  };

  const VectorXd zz_vals = Eigen::SelfAdjointEigenSolver<MatrixXd>(zz / n).eigenvalues();
  diag.min_eig_zz = zz_vals.minCoeff();
  diag.cond_zz = finite_cond(reciprocal_condition(zz_vals.cwiseMax(0.0)));

  const VectorXd zx_sv = Eigen::JacobiSVD<MatrixXd>(zx / n).singularValues();
  diag.min_sv_zx = zx_sv.minCoeff();
  diag.cond_zx = finite_cond(reciprocal_condition(zx_sv));

  diag.max_cluster_ratio = static_cast<double>(max_size * max_size) / n;

  std::vector<VectorXd> residuals;
  try {
    residuals = tsls_fit_blocks(blocks, mspec.labels(), labels).residuals;
  } catch (const NumericalError&) {
    diag.fit_ok = false;
    const MatrixXd w = Eigen::CompleteOrthogonalDecomposition<MatrixXd>(zz).pseudoInverse();
    const MatrixXd bread = zx.transpose() * w * zx;
    const VectorXd theta = Eigen::CompleteOrthogonalDecomposition<MatrixXd>(bread).solve(zx.transpose() * w * zy);
    for (const auto& b : blocks) residuals.push_back(b.outcome - b.regressors * theta);
  }
  MatrixXd omega = MatrixXd::Zero(k, k);
  for (std::size_t g = 0; g < blocks.size(); ++g) {
    const VectorXd ze = blocks[g].instruments.transpose() * residuals[g];
    omega.noalias() += ze * ze.transpose();
  }
  const VectorXd omega_vals = Eigen::SelfAdjointEigenSolver<MatrixXd>(symmetrize(omega) / n).eigenvalues();
  diag.min_eig_zeez = omega_vals.minCoeff();

  const auto weak = [](double lo, double hi) { return !(hi > 0.0) || lo <= kDiagnosticRelTol * hi; };
  if (weak(diag.min_eig_zz, zz_vals.maxCoeff())) {
    diag.instruments_ok = false;
    diag.warnings.push_back("instrument second-moment matrix is (near) singular");
  }
  if (weak(diag.min_eig_zeez, omega_vals.maxCoeff())) {
    diag.instruments_ok = false;
    diag.warnings.push_back("score covariance matrix is (near) singular");
  }
  if (weak(diag.min_sv_zx, zx_sv.maxCoeff())) {
    diag.rank_ok = false;
    diag.warnings.push_back("instrument-regressor cross-moment lacks full column rank; identification fails");
  }
  if (diag.max_cluster_ratio > kClusterRatioWarn) {
    diag.clusters_ok = false;
    diag.warnings.push_back("a single group dominates the sample (max n_g^2/n > 1)");
  }
  if (!diag.fit_ok) diag.warnings.push_back("strict fit failed; residuals from pseudo-inverse solution");
  return diag;
}

}  // namespace peerfx
