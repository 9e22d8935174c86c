// Copyright 2026 The qwork Authors
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

#include <stdexcept>
#include <string>

namespace qwork {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: wrong dimensions, non-Hermitian matrices, out-of-range
/// parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An operator function evaluated outside its domain, e.g. a negative power of
/// a singular matrix.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A structural assumption of an identity does not hold for the given input.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The counting field sits on one of the excluded points of the Renyi form of
/// the cumulant generating function.
class LimitPointError : public Error {
 public:
  using Error::Error;
};

}  // namespace qwork
