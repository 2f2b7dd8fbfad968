// SPDX-License-Identifier: Apache-2.0
//
// rfi-scrub: covariance-domain RFI detection and removal for antenna arrays
// Copyright (C) 2026 the rfi-scrub authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef RFISCRUB_ERRORS_HPP
#define RFISCRUB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rfiscrub {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteError : Error {
    using Error::Error;
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct ZeroStartVectorError : Error {
    using Error::Error;
};

// Stepping a Lanczos recurrence past a detected invariant subspace.
struct BreakdownError : Error {
    using Error::Error;
};

struct NonPositiveEigenvalueError : Error {
    using Error::Error;
};

struct EmptyTailError : Error {
    using Error::Error;
};

struct NegativeRadicandError : Error {
    using Error::Error;
};

struct ZeroMinEigenvalueError : Error {
    using Error::Error;
};

struct NoAcceptanceError : Error {
    using Error::Error;
};

struct NonOrthonormalBasisError : Error {
    using Error::Error;
};

struct DegenerateDenominatorError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

/// Structured failure while decoding a binary or text file.
struct FormatError : Error {
    enum class Kind { BadMagic, BadVersion, BadHeader, TruncatedPayload, TrailingBytes, BadValue };

    FormatError(Kind k, const std::string& msg) : Error(msg), kind(k) {}

    Kind kind;
};

struct HermitianViolationError : Error {
    using Error::Error;
};

/// Configuration / scenario parse error carrying a 1-based line number.
struct ConfigError : Error {
    ConfigError(std::size_t line_no, const std::string& msg)
        : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}

    std::size_t line;
};

} // namespace rfiscrub

#endif // RFISCRUB_ERRORS_HPP
