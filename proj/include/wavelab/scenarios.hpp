#pragma once

// Named end-to-end scenarios, one per acceptance criterion. The acceptance
// binary and `wavelab reproduce <name>` run the same code.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace wavelab {

struct ScenarioCheck {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=", ">=", "==" or "true"
  double limit = 0.0;
  bool ok = false;

  nlohmann::json to_json() const;
};

struct CsvArtifact {
  std::string file;
  std::vector<std::string> header;
  std::vector<Eigen::VectorXd> columns;
};

struct ScenarioResult {
  std::string name;
  int criterion = 0;
  std::uint64_t seed = 0;
  std::vector<ScenarioCheck> checks;
  nlohmann::json details;
  std::vector<CsvArtifact> artifacts;
  double seconds = 0.0;  // wall time, kept out of the written report

  bool passed() const;
  std::string summary() const;  // failed checks first, then the rest
  nlohmann::json report() const;
};

struct ScenarioInfo {
  std::string name;
  int criterion = 0;
  std::string title;
};

const std::vector<ScenarioInfo>& scenario_catalog();

// Throws InvalidArgument for unknown names. With a non-empty out_dir the
// report and artifacts are written to out_dir/<name>/.
ScenarioResult run_scenario(const std::string& name, std::uint64_t seed,
                            const std::string& out_dir = "");

void write_scenario(const ScenarioResult& result, const std::string& dir);

}  // namespace wavelab
