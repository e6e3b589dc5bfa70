#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peerfx/dgp.hpp"
#include "peerfx/estimator.hpp"
#include "peerfx/instruments.hpp"

namespace peerfx {

struct McConfig {
  DesignConfig design;
  ModelSpec model;
  std::size_t replications = 5000;
  std::uint64_t seed = 1;
  std::vector<InstrumentSpec> estimators = {{InstrumentMode::X, 4, false}, {InstrumentMode::E, 4, false}};
  double level = 0.05;
  std::size_t workers = 1;
  // Hausman test of the first mode-E estimator against the first mode-X one.
  bool hausman = false;

  void validate() const;
};

struct CoefficientSummary {
  std::string label;
  double bias = 0.0;
  double std = 0.0;     // NaN when fewer than two replications succeeded
  double t_mean = 0.0;
  double t_std = 0.0;   // NaN when fewer than two replications succeeded
  double rate = 0.0;
};

struct EstimatorSummary {
  std::string name;
  std::vector<CoefficientSummary> coefficients;
};

struct HausmanSummary {
  double rate = 0.0;
  double mean_statistic = 0.0;
  std::size_t dof = 0;
};

struct McReport {
  Phi phi = Phi::zero;
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::vector<EstimatorSummary> estimators;
  std::optional<HausmanSummary> hausman;
  double seconds = 0.0;  // wall time; not part of the serialized report
};

// Largest tolerated share of failed replications before run_design aborts.
inline constexpr double kMaxFailureShare = 0.01;

// Redraws every network, covariate, and error in each replication and fits
// each configured estimator. t-statistics are taken against the true
// parameters; the intercept is left out of the summaries. Output does not
// depend on cfg.workers.
McReport run_design(const McConfig& cfg);

// Human table: one panel per report, 4 decimals.
std::string format_table(std::span<const McReport> reports);

// key=value lines, 17 significant digits.
std::string format_machine(std::span<const McReport> reports);

// Critical value of the two-sided normal test at `level`.
double normal_critical_value(double level);

}  // namespace peerfx
