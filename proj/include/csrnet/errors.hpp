// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace csrnet {

/// Base of every error raised by the library. `kind()` is a short stable tag
/// the CLI prints as a machine-parsable prefix ("error[config]: ...").
class Error : public std::runtime_error {
 public:
  Error(const char* kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  const char* kind() const noexcept { return kind_; }

 private:
  const char* kind_;
};

/// Bad shapes, channel mismatches, invalid hyperparameters.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

/// NaN or Inf encountered where finite values are required.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

/// Operation invoked in the wrong order (e.g. backward before forward).
class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error("state", what) {}
};

/// Checkpoint hash mismatch, truncated or malformed file.
class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what) : Error("integrity", what) {}
};

class UnsupportedVersionError : public Error {
 public:
  explicit UnsupportedVersionError(const std::string& what) : Error("version", what) {}
};

/// Checkpoint contents do not match the graph or request they are loaded into.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error("schema", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace csrnet
