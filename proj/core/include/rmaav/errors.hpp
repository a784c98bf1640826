// Copyright (c) 2026 The rmaav Authors
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

#ifndef RMAAV_ERRORS_HPP
#define RMAAV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rmaav {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments to an API call (sizes, bounds, unknown names).
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// RMA synchronization contract broken: puts outside epochs, stale window
/// handles, mixed epoch kinds, assertion violations, detected read races.
class ProtocolError : public Error {
public:
  using Error::Error;
};

/// Illegal persistent-request transition (e.g. wait before start).
class LifecycleError : public Error {
public:
  using Error::Error;
};

/// A blocking runtime call exceeded the world timeout; usually a deadlock
/// caused by mismatched collectives or an unreleased lock.
class TimeoutError : public Error {
public:
  using Error::Error;
};

/// Text parse failure; carries the 1-based input line.
class ParseError : public Error {
public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  int line() const { return line_; }

private:
  int line_;
};

/// Raised by spawn_world when any rank failed; names the first failing rank.
class WorldError : public Error {
public:
  WorldError(int rank, const std::string& what)
      : Error("world aborted at rank " + std::to_string(rank) + ": " + what),
        rank_(rank) {}

  int rank() const { return rank_; }

private:
  int rank_;
};

}  // namespace rmaav

#endif  // RMAAV_ERRORS_HPP
