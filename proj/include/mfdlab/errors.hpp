#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mfdlab {

/// A parameter is outside its documented domain. `field` names it.
class ParameterError : public std::invalid_argument {
 public:
  ParameterError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Two objects that must agree in shape do not (networks, grids, weights).
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mfdlab
