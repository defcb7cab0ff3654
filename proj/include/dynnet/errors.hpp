// Copyright (c) 2026 The dynnet Authors. All Rights Reserved.
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

namespace dynnet {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad space, bad JSON, bad CSV, failed invariant.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A latency table lacks an operation the architecture needs.
class MissingEntry : public Error {
 public:
  using Error::Error;
};

/// Tabular accuracy model has no entry for the architecture.
class UnknownArchitecture : public Error {
 public:
  using Error::Error;
};

/// Search exhausted its iteration budget.
class NotFound : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class InvalidFamily : public Error {
 public:
  using Error::Error;
};

class NoFeasibleLevel : public Error {
 public:
  using Error::Error;
};

class UnknownDevice : public Error {
 public:
  using Error::Error;
};

class UnknownLevel : public Error {
 public:
  using Error::Error;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

}  // namespace dynnet
