#include "peerfx/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "peerfx/error.hpp"

namespace peerfx {

namespace {

struct ReplicationOutcome {
  bool ok = false;
  std::vector<Eigen::VectorXd> deviation;  // per estimator
  std::vector<Eigen::VectorXd> t;
  std::vector<std::vector<bool>> reject;
  double hausman_statistic = 0.0;
  std::size_t hausman_dof = 0;
  bool hausman_reject = false;
};

std::optional<std::size_t> first_with_mode(const McConfig& cfg, InstrumentMode mode) {
  for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
    if (cfg.estimators[e].mode == mode) return e;
  }
  return std::nullopt;
}

ReplicationOutcome run_replication(const McConfig& cfg, std::uint64_t replication, double critical) {
  ReplicationOutcome out;
  const Dataset data = simulate_dataset(cfg.design, cfg.seed, replication);
  const Eigen::VectorXd truth = cfg.design.params.theta(cfg.model.model);
  std::vector<FitResult> fits;
  try {
    for (const auto& est : cfg.estimators) {
      fits.push_back(tsls_fit(data, cfg.model, est));
      const TStatistics ts = t_statistics(fits.back(), truth, critical);
      out.deviation.push_back(fits.back().theta - truth);
      out.t.push_back(ts.t);
      out.reject.push_back(ts.reject);
    }
    if (cfg.hausman) {
      const auto e = first_with_mode(cfg, InstrumentMode::E);
      const auto x = first_with_mode(cfg, InstrumentMode::X);
      const TestResult test = hausman_test(fits[*e], fits[*x]);
      out.hausman_statistic = test.statistic;
      out.hausman_dof = test.dof;
      out.hausman_reject = test.p_value < cfg.level;
    }
  } catch (const NumericalError&) {
    return out;
  }
  out.ok = true;
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double a : v) s += (a - mean) * (a - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string greek(const std::string& label) {
  static const std::map<std::string, std::string> names = {
      {"alpha", "α"}, {"beta", "β"}, {"gamma", "γ"}, {"delta", "δ"}};
  const auto it = names.find(label);
  return it == names.end() ? label : it->second;
}

// Pads to `width` terminal columns; UTF-8 continuation bytes take none.
std::string pad(const std::string& s, std::size_t width) {
  std::size_t cols = 0;
  for (unsigned char ch : s) cols += (ch & 0xC0) != 0x80 ? 1 : 0;
  return cols >= width ? s + " " : s + std::string(width - cols, ' ');
}

std::string fixed4(double v) {
  if (std::isnan(v)) return "      NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%8.4f", v);
  return buf;
}

std::string full_precision(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Report order follows the published layout: beta, gamma, delta.
std::vector<std::string> reported_labels(const ModelSpec& model) {
  if (model.model == Model::full) return {"beta", "gamma", "delta"};
  return {"beta", "gamma"};
}

}  // namespace

double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("test level must lie in (0, 1)");
  if (level == 0.05) return kCriticalValue5;
  return boost::math::quantile(boost::math::normal(), 1.0 - level / 2.0);
}

void McConfig::validate() const {
  if (replications < 1) throw InvalidArgument("replications must be at least 1");
  if (design.groups < 1) throw InvalidArgument("groups must be at least 1");
  if (design.group_size < 2) throw InvalidArgument("group size must be at least 2");
  if (workers < 1) throw InvalidArgument("workers must be at least 1");
  if (estimators.empty()) throw InvalidArgument("no estimators configured");
  design.params.validate();
  for (const auto& e : estimators) e.validate(model.model);
  normal_critical_value(level);
  if (hausman && (!first_with_mode(*this, InstrumentMode::E) || !first_with_mode(*this, InstrumentMode::X))) {
    throw InvalidArgument("Hausman test needs one mode-E and one mode-X estimator");
  }
}

McReport run_design(const McConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const double critical = normal_critical_value(cfg.level);

  std::vector<ReplicationOutcome> outcomes(cfg.replications);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t r = next++; r < cfg.replications; r = next++) {
      outcomes[r] = run_replication(cfg, r, critical);
    }
  };
  const std::size_t workers = std::min(cfg.workers, cfg.replications);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  McReport report;
  report.phi = cfg.design.coupling.phi;
  report.replications = cfg.replications;
  for (const auto& o : outcomes) report.failures += o.ok ? 0 : 1;
  if (static_cast<double>(report.failures) > kMaxFailureShare * static_cast<double>(cfg.replications)) {
    throw NumericalError(std::to_string(report.failures) + " of " + std::to_string(cfg.replications) +
                         " replications failed; above the 1% tolerance");
  }

  const auto labels = cfg.model.labels();
  for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
    EstimatorSummary summary;
    summary.name = cfg.estimators[e].name();
    for (const auto& label : reported_labels(cfg.model)) {
      const auto k = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), label) - labels.begin());
      std::vector<double> dev, t;
      std::size_t rejections = 0;
      for (const auto& o : outcomes) {
        if (!o.ok) continue;
        dev.push_back(o.deviation[e](k));
        t.push_back(o.t[e](k));
        rejections += o.reject[e][k] ? 1 : 0;
      }
      CoefficientSummary c;
      c.label = label;
      c.bias = mean_of(dev);
      c.std = std_of(dev, c.bias);
      c.t_mean = mean_of(t);
      c.t_std = std_of(t, c.t_mean);
      c.rate = static_cast<double>(rejections) / static_cast<double>(dev.size());
      summary.coefficients.push_back(c);
    }
    report.estimators.push_back(std::move(summary));
  }

  if (cfg.hausman) {
    HausmanSummary h;
    std::size_t used = 0, rejections = 0;
    double total = 0.0;
    for (const auto& o : outcomes) {
      if (!o.ok) continue;
      ++used;
      total += o.hausman_statistic;
      rejections += o.hausman_reject ? 1 : 0;
      h.dof = std::max(h.dof, o.hausman_dof);
    }
    h.rate = static_cast<double>(rejections) / static_cast<double>(used);
    h.mean_statistic = total / static_cast<double>(used);
    report.hausman = h;
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string format_table(std::span<const McReport> reports) {
  std::vector<std::string> names = {"TSLS-X", "TSLS-E"};
  if (!reports.empty()) {
    names.clear();
    for (const auto& e : reports.front().estimators) names.push_back(e.name);
  }
  std::ostringstream os;
  os << "Simulation results\n";
  os << "     ";
  for (const auto& name : names) {
    os << "  " << pad(name, 40);
  }
  os << '\n' << "     ";
  for (std::size_t e = 0; e < names.size(); ++e) {
    os << "  " << "    bias     std    mean     std    rate";
  }
  os << '\n';
  for (const auto& r : reports) {
    os << '\n' << "  " << phi_label(r.phi) << '\n';
    if (r.estimators.empty()) continue;
    for (std::size_t c = 0; c < r.estimators.front().coefficients.size(); ++c) {
      os << pad(greek(r.estimators.front().coefficients[c].label), 5);
      for (const auto& e : r.estimators) {
        const auto& s = e.coefficients[c];
        os << "  " << fixed4(s.bias) << fixed4(s.std) << fixed4(s.t_mean) << fixed4(s.t_std) << fixed4(s.rate);
      }
      os << '\n';
    }
    if (r.hausman) {
      os << "  Hausman rejection rate " << fixed4(r.hausman->rate) << "  mean statistic"
         << fixed4(r.hausman->mean_statistic) << '\n';
    }
    os << "  replications " << r.replications << ", failures " << r.failures << '\n';
  }
  return os.str();
}

std::string format_machine(std::span<const McReport> reports) {
  std::ostringstream os;
  for (const auto& r : reports) {
    const std::string p(to_string(r.phi));
    os << p << ".replications=" << r.replications << '\n';
    os << p << ".failures=" << r.failures << '\n';
    for (const auto& e : r.estimators) {
      for (const auto& c : e.coefficients) {
        const std::string key = p + "." + e.name + "." + c.label + ".";
        os << key << "bias=" << full_precision(c.bias) << '\n';
        os << key << "std=" << full_precision(c.std) << '\n';
        os << key << "t_mean=" << full_precision(c.t_mean) << '\n';
        os << key << "t_std=" << full_precision(c.t_std) << '\n';
        os << key << "rate=" << full_precision(c.rate) << '\n';
      }
    }
    if (r.hausman) {
      os << p << ".hausman.rate=" << full_precision(r.hausman->rate) << '\n';
      os << p << ".hausman.mean_statistic=" << full_precision(r.hausman->mean_statistic) << '\n';
      os << p << ".hausman.dof=" << r.hausman->dof << '\n';
    }
  }
  return os.str();
}

}  // namespace peerfx
