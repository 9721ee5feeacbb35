#ifndef MACA_ORACLE_VERIFY_H_
#define MACA_ORACLE_VERIFY_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace maca::oracle {

struct VerifyCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  // Upper-bound checks pass when value <= bound; lower-bound checks when
  // value > bound.
  bool upper = true;
  size_t instances = 0;
  bool passed = false;
};

struct VerifyOptions {
  size_t games = 20;
  size_t jensen_trials = 100;
  uint64_t seed = 1;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool passed() const;
};

// Score-weighted baseline expectations on random one-step games, including
// the action-dependent control b = Q.
std::vector<VerifyCheck> VerifyUnbiasedness(const VerifyOptions& options);
// Var(b*) - Var(b) for zero, exact k-level and constant baselines.
std::vector<VerifyCheck> VerifyMinimumVariance(const VerifyOptions& options);
std::vector<VerifyCheck> VerifyCovarianceIdentity(const VerifyOptions& options);
std::vector<VerifyCheck> VerifyJensen(const VerifyOptions& options);
std::vector<VerifyCheck> VerifyReductions(const VerifyOptions& options);
std::vector<VerifyCheck> VerifyBellman(const VerifyOptions& options);

VerifyReport RunVerifySuite(const VerifyOptions& options = {});

nlohmann::json ToJson(const VerifyReport& report);
// One "PASS|FAIL name value bound" line per check.
std::string FormatReport(const VerifyReport& report);

}  // namespace maca::oracle

#endif  // MACA_ORACLE_VERIFY_H_
