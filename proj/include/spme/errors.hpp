#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace spme {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Electrode { anode, cathode };

inline const char* to_string(Electrode e) { return e == Electrode::anode ? "anode" : "cathode"; }

/// Surface stoichiometry left the [0, 1] domain of the OCV fit.
struct DomainError : Error {
  DomainError(Electrode e, double stoich)
      : Error(std::string(to_string(e)) + " surface stoichiometry " + std::to_string(stoich) +
              " outside OCV domain [0, 1]"),
        electrode(e),
        stoichiometry(stoich) {}
  Electrode electrode;
  double stoichiometry;
};

/// A concentration feeding the exchange-current density is nonpositive.
struct SingularityError : Error {
  using Error::Error;
};

struct IntegrationError : Error {
  IntegrationError(std::size_t step, const std::string& what)
      : Error("integration failure at step " + std::to_string(step) + ": " + what), step_index(step) {}
  std::size_t step_index;
};

struct DimensionError : Error {
  using Error::Error;
};

struct IllConditionedError : Error {
  IllConditionedError(double cond, double jitter)
      : Error("covariance factorization failed after jitter " + std::to_string(jitter) +
              " (condition estimate " + std::to_string(cond) + ")"),
        condition_estimate(cond) {}
  double condition_estimate;
};

struct ContractViolation : Error {
  using Error::Error;
};

/// Estimation could not produce a result. Any optimizer trace gathered
/// before the failure is attached.
struct EstimationError : Error {
  using Error::Error;
  std::vector<double> best_trace;
  std::vector<double> mean_trace;
};

/// Malformed or missing configuration; `key` names the offending entry.
struct ConfigError : Error {
  ConfigError(std::string k, const std::string& what) : Error(what), key(std::move(k)) {}
  std::string key;
};

}  // namespace spme
