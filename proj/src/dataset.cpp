#include "peerfx/dataset.hpp"

#include <bit>
#include <set>

#include "peerfx/error.hpp"

namespace peerfx {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void mix(std::uint64_t& h, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) {
    h ^= (v >> (8 * b)) & 0xffU;
    h *= kFnvPrime;
  }
}

}  // namespace

void GroupData::validate() const {
  const auto n = static_cast<Eigen::Index>(graph.size());
  if (x.size() != n) throw InvalidArgument("group '" + id + "': x length does not match graph size");
  if (y.size() != n) throw InvalidArgument("group '" + id + "': y length does not match graph size");
}

std::size_t Dataset::observation_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

void Dataset::validate() const {
  if (groups.empty()) throw InvalidArgument("dataset has no groups");
  std::set<std::string> seen;
  for (const auto& g : groups) {
    g.validate();
    if (!seen.insert(g.id).second) throw InvalidArgument("duplicate group id '" + g.id + "'");
  }
}

std::uint64_t Dataset::signature() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& g : groups) {
    for (char c : g.id) mix(h, static_cast<unsigned char>(c));
    mix(h, g.size());
    for (const auto& [i, j] : g.graph.edges()) {
      mix(h, i);
      mix(h, j);
    }
    for (Eigen::Index k = 0; k < g.x.size(); ++k) mix(h, std::bit_cast<std::uint64_t>(g.x(k)));
    for (Eigen::Index k = 0; k < g.y.size(); ++k) mix(h, std::bit_cast<std::uint64_t>(g.y(k)));
  }
  return h;
}

std::vector<std::string> ModelSpec::labels() const {
  if (model == Model::full) return {"alpha", "delta", "beta", "gamma"};
  return {"alpha", "beta", "gamma"};
}

Eigen::MatrixXd ModelSpec::regressors(const GroupData& d) const {
  const auto n = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index c = 0;
  x.col(c++).setOnes();
  if (model == Model::full) x.col(c++) = apply_transition(d.graph, d.y);
  x.col(c++) = d.x;
  x.col(c++) = apply_transition(d.graph, d.x);
  return x;
}

}  // namespace peerfx
