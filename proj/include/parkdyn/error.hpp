#pragma once

#include <stdexcept>
#include <string>

namespace parkdyn {

/// Malformed network / scenario / calibration file. Message carries the
/// offending field path (e.g. "links[3].length_km").
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The simulator met a node it cannot leave.
class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Not enough spread in the data to identify the model parameters.
class FitDegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Estimator evaluated where its denominator vanishes (occupancy == 1).
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Macro state violated mass conservation or a non-negativity bound.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace parkdyn
