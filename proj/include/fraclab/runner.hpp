#pragma once

// Configuration-driven experiment runner tying the modules into reproducible
// pipelines with machine-readable reports.  Config format: JSON with a strict
// schema (unknown keys are errors); every run writes the fully resolved
// config next to its outputs.
//
// Exit codes: 0 all asserted checks pass, 1 numeric check failure, 2 schema
// or usage violation.

#include "fraclab/jsonio.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace fraclab {

struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  std::string out_dir = ".";
  bool blind = false;
  bool oracle = false;
  bool force = false;
};

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Throws SchemaError naming the offending field path.
void validate_config(const json& config);

/// Defaults expanded; deterministic field order.
json resolve_config(const json& config, const RunOptions& opt);

int run_subcommand(const std::string& name, const json& config,
                   const RunOptions& opt);

/// Recomputes discretization-dependent thresholds and rewrites golden files.
/// Refuses on drift beyond tolerance unless opt.force.
int regen_golden(const json& config, const RunOptions& opt);

// Exposed for tests: building blocks resolved from a config.
DiscreteManifold manifold_from_config(const json& resolved);
ObservationSet observation_from_config(const json& resolved,
                                       const DiscreteManifold& m);
Potential potential_from_config(const json& resolved,
                                const DiscreteManifold& m,
                                const ObservationSet& O);

}  // namespace fraclab
