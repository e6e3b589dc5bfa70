#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "peerfx/dataset.hpp"
#include "peerfx/dgp.hpp"
#include "peerfx/montecarlo.hpp"

namespace peerfx {

// Edge file:  header "group_id,i,j", one undirected link per row.
// Node file:  header "group_id,node_id,x" or "group_id,node_id,x,y".
// Node ids within a group must be exactly 0..n_g-1. Groups come out in
// ascending lexicographic id order. Missing y is stored as NaN.
//
// Parse problems throw DataError prefixed with "<source>:<line>: ".
Dataset load_dataset(std::istream& edges, std::istream& nodes, const std::string& edge_source = "edges",
                     const std::string& node_source = "nodes");
Dataset load_dataset(const std::filesystem::path& edges, const std::filesystem::path& nodes);

// Writes with 17 significant digits. The y column is written only when
// every outcome is finite.
void write_dataset(const Dataset& d, std::ostream& edges, std::ostream& nodes);
void write_dataset(const Dataset& d, const std::filesystem::path& edges, const std::filesystem::path& nodes);

bool has_outcomes(const Dataset& d);

// Monte Carlo run configuration plus the phi panels to run.
struct RunConfig {
  McConfig mc;
  std::vector<Phi> phis = {Phi::zero, Phi::linear, Phi::exp3, Phi::sine3};
};

// JSON object with any of the keys: groups, group_size, replications, seed,
// workers, level, phis, alpha, delta, beta, gamma, threshold, steps, model,
// estimators, second_moments, hausman. Unknown keys are rejected by name.
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace peerfx
