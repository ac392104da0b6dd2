// Copyright 2026 The Perch Authors
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

#ifndef PERCH_ERROR_HPP_
#define PERCH_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace perch {

// Domain error with a stable machine-readable code. The code strings double
// as HTTP error-body codes and CLI diagnostics, so they never change.
class Error : public std::runtime_error {
 public:
  Error(std::string code, std::string message, std::string detail = {})
      : std::runtime_error(code + ": " + message +
                           (detail.empty() ? "" : " (" + detail + ")")),
        code_(std::move(code)),
        message_(std::move(message)),
        detail_(std::move(detail)) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string code_;
  std::string message_;
  std::string detail_;
};

namespace errc {
// ledger / codec
inline constexpr const char* kDecodeError = "DecodeError";
inline constexpr const char* kInvalidCertificate = "InvalidCertificate";
inline constexpr const char* kSignatureMismatch = "SignatureMismatch";
inline constexpr const char* kEmptyEntries = "EmptyEntries";
inline constexpr const char* kNonMonotonicTimestamps = "NonMonotonicTimestamps";
inline constexpr const char* kWrongCreatorRole = "WrongCreatorRole";
// storage
inline constexpr const char* kCorruptLayout = "CorruptLayout";
inline constexpr const char* kIoFailure = "IoFailure";
inline constexpr const char* kHeightGap = "HeightGap";
inline constexpr const char* kLinkMismatch = "LinkMismatch";
inline constexpr const char* kDestinationNotEmpty = "DestinationNotEmpty";
inline constexpr const char* kSourceCorrupt = "SourceCorrupt";
// gateway
inline constexpr const char* kAlreadyRegistered = "AlreadyRegistered";
inline constexpr const char* kInvalidGenesis = "InvalidGenesis";
inline constexpr const char* kUnknownChain = "UnknownChain";
inline constexpr const char* kNotAuthorized = "NotAuthorized";
inline constexpr const char* kOutOfRange = "OutOfRange";
// identity
inline constexpr const char* kClockSkew = "ClockSkew";
inline constexpr const char* kInvalidValidity = "InvalidValidity";
inline constexpr const char* kUnknownFingerprint = "UnknownFingerprint";
inline constexpr const char* kBrokenChain = "BrokenChain";
// block creation
inline constexpr const char* kBadInstitutionSignature = "BadInstitutionSignature";
inline constexpr const char* kBadCustomerSignature = "BadCustomerSignature";
inline constexpr const char* kNotPermitted = "NotPermitted";
inline constexpr const char* kDuplicateExternalRef = "DuplicateExternalRef";
inline constexpr const char* kInvalidTransaction = "InvalidTransaction";
inline constexpr const char* kEmptyQueue = "EmptyQueue";
inline constexpr const char* kPublishFailed = "PublishFailed";
// reporting
inline constexpr const char* kTamperedChain = "TamperedChain";
inline constexpr const char* kInvalidFilter = "InvalidFilter";
// feed / http
inline constexpr const char* kBindFailure = "BindFailure";
inline constexpr const char* kTransportFailure = "TransportFailure";
// cli
inline constexpr const char* kConfigError = "ConfigError";
}  // namespace errc

}  // namespace perch

#endif  // PERCH_ERROR_HPP_
