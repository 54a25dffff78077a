#pragma once

// Verification suite behind the `verify` command: analytic examples, bound
// sandwiches, probabilistic inequalities and fast-path/oracle agreement.

#include "cndr/config.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cndr {

struct CheckResult {
  std::string name;
  bool passed = false;
  nlohmann::json detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  nlohmann::json to_json() const;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  long long draws = 20000;
  int concentration_trials = 200;
  std::vector<int> concentration_sizes{50, 100, 200, 400};
};

VerifyOptions verify_options(const RunConfig& cfg);

CheckResult check_eigengap_example();
CheckResult check_lower_bound_sandwich(const VerifyOptions& opt);
CheckResult check_khintchine(const VerifyOptions& opt);
CheckResult check_massart(const VerifyOptions& opt);
CheckResult check_spectral_identity(const VerifyOptions& opt);
CheckResult check_projection_oracle(const VerifyOptions& opt);
CheckResult check_exhaustive_consistency(const VerifyOptions& opt);
CheckResult check_comparison_terms(const VerifyOptions& opt);
CheckResult check_concentration(const VerifyOptions& opt);
// Upper bound against a Monte-Carlo estimate on the configured labeled sample.
CheckResult check_configured_data(const RunConfig& cfg, const VerifyOptions& opt);

// Every check above; the data check only when the configuration names data.
VerifyReport run_verification(const RunConfig& cfg);

}  // namespace cndr
