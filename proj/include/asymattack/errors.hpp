//
// Copyright 2026 The asymattack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef ASYMATTACK_ERRORS_HPP
#define ASYMATTACK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace asym {

// Numerical preconditions.
class InvalidDimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DegenerateProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateEstimateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OptimizationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InitializationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File and spec handling.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedSpecError : public ParseError {
 public:
  using ParseError::ParseError;
};

class UnknownOracleKindError : public MalformedSpecError {
 public:
  using MalformedSpecError::MalformedSpecError;
};

class UnwritableOutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace asym

#endif  // ASYMATTACK_ERRORS_HPP
