// Copyright 2026 The PiNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pinet {

/// Operand shapes are incompatible.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// An argument lies outside the domain of the operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A softmax slice has no unmasked position.
struct DegenerateMaskError : DomainError {
  using DomainError::DomainError;
};

/// A call violated a documented precondition of the API.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// A computation produced NaN or Inf.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Random graph generation gave up.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number when known.
struct FormatError : std::runtime_error {
  FormatError(const std::string& what, std::size_t line_no = 0)
      : std::runtime_error(line_no ? what + " (line " + std::to_string(line_no) + ")" : what),
        line(line_no) {}
  std::size_t line;
};

}  // namespace pinet
