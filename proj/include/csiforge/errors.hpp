// SPDX-License-Identifier: Apache-2.0
//
// csiforge: deterministic ray-traced MIMO-OFDM channels and spatial CSI learning
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

#pragma once

#include <stdexcept>
#include <string>

namespace csiforge {

/// Malformed input text (JSON syntax, missing keys, wrong types).
class ParseError : public std::runtime_error {
  public:
    explicit ParseError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Structurally well-formed input that violates a domain invariant.
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Filesystem-level failure (missing file, unwritable path).
class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Unknown magic bytes or unsupported format version.
class FormatError : public IoError {
  public:
    explicit FormatError(const std::string &msg) : IoError(msg) {}
};

/// Stored checksum does not match the payload.
class ChecksumError : public IoError {
  public:
    explicit ChecksumError(const std::string &msg) : IoError(msg) {}
};

/// File ends before the declared content does.
class TruncationError : public IoError {
  public:
    explicit TruncationError(const std::string &msg) : IoError(msg) {}
};

/// Non-finite loss or gradient during optimization.
class TrainError : public std::runtime_error {
  public:
    explicit TrainError(const std::string &msg) : std::runtime_error(msg) {}
};

/// A condition the library promises can never happen.
class InternalError : public std::logic_error {
  public:
    explicit InternalError(const std::string &msg) : std::logic_error(msg) {}
};

} // namespace csiforge
