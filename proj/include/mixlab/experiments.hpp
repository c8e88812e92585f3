#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mixlab/config.hpp"
#include "mixlab/fit.hpp"
#include "mixlab/report.hpp"
#include "mixlab/spectral.hpp"

namespace mixlab {

enum class Experiment {
  stability_cascade,
  mixing,
  field_perturbation,
  vanishing_diffusion,
  regularity,
  commutator_integral,
  besov_decay,
  counterexample_part1,
  counterexample_part2
};

Experiment parse_experiment(const std::string& name);  // throws ConfigError
std::string experiment_name(Experiment e);
const std::vector<Experiment>& all_experiments();

struct ExperimentResult {
  Report report;
  std::vector<FitReport> fits;
  std::vector<std::pair<std::string, ScalarField>> fields;
  std::string config_digest;

  explicit ExperimentResult(const std::string& name) : report(name) {}
};

// Reads and validates every key before computing; unknown keys, bad values and
// violated preconditions throw (ConfigError or std::invalid_argument).
ExperimentResult run_experiment(Experiment e, const Config& cfg, std::uint64_t seed);

// report.csv, fit.csv and fields/<name>.mixf under dir (created if missing).
void write_outputs(const ExperimentResult& result, const std::string& dir);

}  // namespace mixlab
