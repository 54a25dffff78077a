#pragma once

#include "cndr/constraints.hpp"
#include "cndr/io.hpp"
#include "cndr/kernels.hpp"
#include "cndr/trainer.hpp"

#include "json.hpp"

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace cndr {

struct KernelDecl {
  KernelSpec spec;          // `normalize` requests scaling on the anchor sample
  std::string matrix_path;  // precomputed kernels only (resolved path)
};

struct VerifyConfig {
  long long draws = 20000;
  int concentration_trials = 200;
  std::vector<int> concentration_sizes{50, 100, 200, 400};
};

// Parsed `key = value` run configuration. Relative paths are resolved
// against the configuration file's directory.
struct RunConfig {
  std::string labeled_path;
  std::string unlabeled_path;  // empty: the labeled points double as the anchor
  std::string predict_path;
  DataFormat format = DataFormat::csv;
  int dim = 0;

  std::vector<KernelDecl> kernels;
  ConstraintParams constraints;
  TrainConfig train;
  std::uint64_t seed = 0;

  std::string output_dir = "out";
  bool write_json = true;
  bool write_csv = true;

  double rho = 0.1;
  std::optional<double> exact_gap;
  long long rademacher_draws = 10000;
  bool rademacher_exhaustive = false;

  VerifyConfig verify;

  int num_kernels() const { return static_cast<int>(kernels.size()); }
};

// Throws ConfigError on unknown, duplicate or malformed keys, with line numbers.
RunConfig parse_config(std::istream& in, const std::string& source, const std::string& base_dir);
RunConfig load_config(const std::string& path);

// Kernel specs ready for use: precomputed matrices loaded, normalization
// applied on `anchor`.
std::vector<KernelSpec> resolve_kernels(const RunConfig& cfg, const PointSet& anchor);

// Every setting under its configuration key, for embedding in reports.
nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace cndr
