#include "peerfx/io.hpp"

#include <charconv>
#include <limits>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "peerfx/error.hpp"

namespace peerfx {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

class LineError {
 public:
  LineError(const std::string& source, std::size_t line) : prefix_(source + ":" + std::to_string(line) + ": ") {}
  [[noreturn]] void raise(const std::string& what) const { throw DataError(prefix_ + what); }

 private:
  std::string prefix_;
};

std::size_t parse_index(std::string_view field, const char* name, const LineError& err) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    err.raise(std::string("field '") + name + "' is not a non-negative integer: '" + std::string(field) + "'");
  }
  return v;
}

double parse_real(std::string_view field, const char* name, const LineError& err) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    err.raise(std::string("field '") + name + "' is not a finite number: '" + std::string(field) + "'");
  }
  return v;
}

// Splits the header row; an empty input is an error.
std::vector<std::string_view> read_header(std::istream& in, std::string& buffer, const std::string& source) {
  if (!std::getline(in, buffer)) throw DataError(source + ":1: missing header row");
  return split(buffer);
}

struct NodeRecord {
  double x = 0.0;
  double y = std::numeric_limits<double>::quiet_NaN();
};

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset load_dataset(std::istream& edges, std::istream& nodes, const std::string& edge_source,
                     const std::string& node_source) {
  std::string line;
  std::map<std::string, std::map<std::size_t, NodeRecord>> groups;

  const auto node_header = read_header(nodes, line, node_source);
  const bool with_y = node_header.size() == 4;
  if (!(node_header.size() == 3 || with_y) || node_header[0] != "group_id" || node_header[1] != "node_id" ||
      node_header[2] != "x" || (with_y && node_header[3] != "y")) {
    throw DataError(node_source + ":1: expected header 'group_id,node_id,x[,y]'");
  }
  for (std::size_t lineno = 2; std::getline(nodes, line); ++lineno) {
    if (trim(line).empty()) continue;
    const LineError err(node_source, lineno);
    const auto f = split(line);
    if (f.size() != node_header.size()) {
      err.raise("expected " + std::to_string(node_header.size()) + " fields, got " + std::to_string(f.size()));
    }
    if (f[0].empty()) err.raise("empty group_id");
    const std::size_t node = parse_index(f[1], "node_id", err);
    NodeRecord rec;
    rec.x = parse_real(f[2], "x", err);
    if (with_y) rec.y = parse_real(f[3], "y", err);
    if (!groups[std::string(f[0])].emplace(node, rec).second) {
      err.raise("duplicate record for node " + std::to_string(node) + " in group '" + std::string(f[0]) + "'");
    }
  }

  std::map<std::string, std::vector<Edge>> links;
  const auto edge_header = read_header(edges, line, edge_source);
  if (edge_header.size() != 3 || edge_header[0] != "group_id" || edge_header[1] != "i" || edge_header[2] != "j") {
    throw DataError(edge_source + ":1: expected header 'group_id,i,j'");
  }
  for (std::size_t lineno = 2; std::getline(edges, line); ++lineno) {
    if (trim(line).empty()) continue;
    const LineError err(edge_source, lineno);
    const auto f = split(line);
    if (f.size() != 3) err.raise("expected 3 fields, got " + std::to_string(f.size()));
    const std::string group(f[0]);
    const std::size_t i = parse_index(f[1], "i", err);
    const std::size_t j = parse_index(f[2], "j", err);
    const auto g = groups.find(group);
    if (g == groups.end()) err.raise("edge refers to group '" + group + "' absent from the node file");
    if (!g->second.contains(i) || !g->second.contains(j)) {
      err.raise("edge (" + std::to_string(i) + ", " + std::to_string(j) + ") refers to a node absent from group '" +
                group + "'");
    }
    if (i == j) err.raise("self-loop at node " + std::to_string(i));
    links[group].emplace_back(i, j);
  }

  Dataset d;
  for (auto& [id, records] : groups) {
    const std::size_t n = records.size();
    if (records.rbegin()->first != n - 1) {
      throw DataError(node_source + ": group '" + id + "' node ids must be 0.." + std::to_string(n - 1));
    }
    GroupData g;
    g.id = id;
    g.graph = Graph::from_edges(n, links[id]);
    g.x.resize(static_cast<Eigen::Index>(n));
    g.y.resize(static_cast<Eigen::Index>(n));
    for (const auto& [k, rec] : records) {
      g.x(static_cast<Eigen::Index>(k)) = rec.x;
      g.y(static_cast<Eigen::Index>(k)) = rec.y;
    }
    d.groups.push_back(std::move(g));
  }
  if (d.groups.empty()) throw DataError(node_source + ": no node records");
  return d;
}

Dataset load_dataset(const std::filesystem::path& edges, const std::filesystem::path& nodes) {
  std::ifstream e(edges);
  if (!e) throw DataError("cannot open edge file '" + edges.string() + "'");
  std::ifstream n(nodes);
  if (!n) throw DataError("cannot open node file '" + nodes.string() + "'");
  return load_dataset(e, n, edges.string(), nodes.string());
}

bool has_outcomes(const Dataset& d) {
  for (const auto& g : d.groups) {
    if (g.y.size() != static_cast<Eigen::Index>(g.size()) || !g.y.allFinite()) return false;
  }
  return true;
}

void write_dataset(const Dataset& d, std::ostream& edges, std::ostream& nodes) {
  const bool with_y = has_outcomes(d);
  edges << "group_id,i,j\n";
  nodes << (with_y ? "group_id,node_id,x,y\n" : "group_id,node_id,x\n");
  for (const auto& g : d.groups) {
    if (g.id.empty() || g.id.find_first_of(",\n\r") != std::string::npos) {
      throw InvalidArgument("group id '" + g.id + "' cannot be written as a CSV field");
    }
    for (const auto& [i, j] : g.graph.edges()) edges << g.id << ',' << i << ',' << j << '\n';
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(g.size()); ++k) {
      nodes << g.id << ',' << k << ',' << format17(g.x(k));
      if (with_y) nodes << ',' << format17(g.y(k));
      nodes << '\n';
    }
  }
}

void write_dataset(const Dataset& d, const std::filesystem::path& edges, const std::filesystem::path& nodes) {
  std::ofstream e(edges);
  if (!e) throw DataError("cannot write '" + edges.string() + "'");
  std::ofstream n(nodes);
  if (!n) throw DataError("cannot write '" + nodes.string() + "'");
  write_dataset(d, e, n);
  if (!e || !n) throw DataError("write failed for '" + edges.string() + "' or '" + nodes.string() + "'");
}

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("config: top level must be an object");

  RunConfig cfg = std::move(base);
  auto& mc = cfg.mc;
  int steps = -1;
  std::optional<bool> second_moments;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "groups") mc.design.groups = value.get<std::size_t>();
      else if (key == "group_size") mc.design.group_size = value.get<std::size_t>();
      else if (key == "replications") mc.replications = value.get<std::size_t>();
      else if (key == "seed") mc.seed = value.get<std::uint64_t>();
      else if (key == "workers") mc.workers = value.get<std::size_t>();
      else if (key == "level") mc.level = value.get<double>();
      else if (key == "alpha") mc.design.params.alpha = value.get<double>();
      else if (key == "delta") mc.design.params.delta = value.get<double>();
      else if (key == "beta") mc.design.params.beta = value.get<double>();
      else if (key == "gamma") mc.design.params.gamma = value.get<double>();
      else if (key == "threshold") mc.design.formation.threshold = value.get<double>();
      else if (key == "steps") steps = value.get<int>();
      else if (key == "second_moments") second_moments = value.get<bool>();
      else if (key == "hausman") mc.hausman = value.get<bool>();
      else if (key == "model") {
        const auto m = value.get<std::string>();
        if (m == "full") mc.model.model = Model::full;
        else if (m == "baseline") mc.model.model = Model::baseline;
        else throw DataError("config: model must be 'full' or 'baseline', got '" + m + "'");
      } else if (key == "phis") {
        cfg.phis.clear();
        for (const auto& p : value) cfg.phis.push_back(parse_phi(p.get<std::string>()));
      } else if (key == "estimators") {
        mc.estimators.clear();
        for (const auto& e : value) {
          const auto m = e.get<std::string>();
          if (m != "E" && m != "X") throw DataError("config: estimator must be 'E' or 'X', got '" + m + "'");
          mc.estimators.push_back({m == "E" ? InstrumentMode::E : InstrumentMode::X, 4, false});
        }
      } else {
        throw DataError("config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  for (auto& e : mc.estimators) {
    if (steps >= 0) e.max_step = steps;
    if (second_moments) e.include_second_moments = *second_moments && e.mode == InstrumentMode::E;
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), std::move(base));
}

}  // namespace peerfx
