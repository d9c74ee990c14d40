#pragma once

#include <stdexcept>
#include <string>

namespace sinklimit {

// Malformed input: bad game files, out-of-range indices, bad priors.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A solve that did not meet its tolerance, or a chain that violates the
// structural preconditions of a solver.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal invariant broken (pseudosink missing, order not decreasing, ...).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace sinklimit
