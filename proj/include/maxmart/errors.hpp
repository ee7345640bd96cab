// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace maxmart {

/// Bad argument: wrong shape, non-finite value, out-of-domain parameter,
/// or a request the routine refuses to serve (e.g. too few replications).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A mathematical precondition of a bound does not hold for the given data
/// (for instance a zero variance on the diagonal of V).
class PreconditionError : public std::domain_error {
 public:
  explicit PreconditionError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace maxmart
