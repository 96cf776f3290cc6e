// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TFD Authors

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tfd {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor shape or layout mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or argument (bad preset name, unknown JSON key, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Dataset problems: empty sets, single-class labels, missing images.
class DataError : public Error {
public:
    using Error::Error;
};

/// File-system failures, always carrying the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents; `offset` is the byte position where parsing stopped.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace tfd
