#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peerfx/dataset.hpp"
#include "peerfx/instruments.hpp"

namespace peerfx {

// Two-sided 5% normal critical value.
inline constexpr double kCriticalValue5 = 1.959964;

// Reciprocal condition number below which a cross-product is singular.
inline constexpr double kSingularRcond = 1e-12;

// Per-group design: regressors X_g, instruments Z_g, outcome y_g.
struct MomentBlock {
  std::string id;
  Eigen::MatrixXd regressors;
  Eigen::MatrixXd instruments;
  Eigen::VectorXd outcome;
};

struct FitResult {
  Eigen::VectorXd theta;
  Eigen::MatrixXd cov;
  Eigen::VectorXd std_errors;
  std::vector<Eigen::VectorXd> residuals;  // one per group, in input order
  std::vector<std::string> labels;
  std::vector<std::string> instrument_labels;
  std::size_t instrument_count = 0;
  std::size_t observations = 0;
  std::size_t groups = 0;

  Eigen::MatrixXd s_n;      // sum Z'X
  Eigen::MatrixXd w_n;      // (sum Z'Z)^{-1}
  Eigen::MatrixXd omega_n;  // sum Z'e e'Z

  std::uint64_t dataset_signature = 0;
  std::string estimator;

  std::optional<std::size_t> index_of(const std::string& label) const;
};

// Pooled 2SLS on arbitrary per-group blocks. Sums are reduced in ascending
// block id order so that the result does not depend on how blocks are
// ordered in the input.
//
// Throws NumericalError when sum Z'Z or the projected regressor
// cross-product has reciprocal condition number below kSingularRcond.
FitResult tsls_fit_blocks(std::span<const MomentBlock> blocks, std::vector<std::string> labels,
                          std::vector<std::string> instrument_labels = {});

FitResult tsls_fit(const Dataset& d, const ModelSpec& mspec, const InstrumentSpec& ispec);

// Cluster-robust sandwich (S'WS)^{-1} S'W Omega W S (S'WS)^{-1} with no
// degrees-of-freedom scaling. Returned matrix is symmetrized.
Eigen::MatrixXd cluster_variance(const Eigen::MatrixXd& s_n, const Eigen::MatrixXd& w_n,
                                 const Eigen::MatrixXd& omega_n);

struct TStatistics {
  Eigen::VectorXd t;
  Eigen::VectorXd p_values;
  std::vector<bool> reject;
};

// (theta - theta0)_k / sqrt(V_kk). Throws NumericalError naming the first
// coordinate whose variance is not strictly positive.
TStatistics t_statistics(const FitResult& fit, const Eigen::VectorXd& theta0,
                         double critical = kCriticalValue5);

struct TestResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

// Durbin-Wu-Hausman contrast between two fits on the same data. Uses
// M = V_X + V_E (pseudo-inverted, dof = rank M), restricted to `coords`.
// Default coordinates: delta and gamma, or gamma in the baseline model.
TestResult hausman_test(const FitResult& fit_e, const FitResult& fit_x,
                        std::vector<std::string> coords = {});

struct Diagnostics {
  double min_eig_zz = 0.0;        // min eigenvalue of sum Z'Z / n
  double min_eig_zeez = 0.0;      // min eigenvalue of sum Z'ee'Z / n
  double min_sv_zx = 0.0;         // smallest singular value of sum Z'X / n
  double max_cluster_ratio = 0.0; // max_g n_g^2 / n
  double cond_zz = 0.0;
  double cond_zx = 0.0;

  bool instruments_ok = true;   // both eigenvalue conditions
  bool rank_ok = true;          // Z'X full column rank
  bool clusters_ok = true;      // no dominant group
  bool fit_ok = true;           // strict fit succeeded; otherwise residuals come from a pseudo-solve

  std::vector<std::string> warnings;
};

// Relative tolerance for the eigenvalue and singular-value warnings.
inline constexpr double kDiagnosticRelTol = 1e-8;
// Warn when a single group holds more than this share n_g^2 / n.
inline constexpr double kClusterRatioWarn = 1.0;

// Sample analogues of the regularity conditions. Never throws on numerical
// degeneracy; degenerate designs are reported through the flags.
Diagnostics diagnostics(const Dataset& d, const ModelSpec& mspec, const InstrumentSpec& ispec);

// Per-group moment blocks for a dataset.
std::vector<MomentBlock> moment_blocks(const Dataset& d, const ModelSpec& mspec,
                                       const InstrumentSpec& ispec);

}  // namespace peerfx
