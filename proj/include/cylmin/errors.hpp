#pragma once

#include <stdexcept>
#include <string>

namespace cylmin {

/// Raised when a numerical procedure cannot deliver its contract: a root
/// bracket without sign change, an unresolvable winding, a quadrature that
/// fails to reach tolerance. Precondition violations use std::invalid_argument.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

class UnresolvedWinding : public NumericalFailure {
 public:
  explicit UnresolvedWinding(const std::string& what) : NumericalFailure(what) {}
};

}  // namespace cylmin
