// Copyright 2026 The ovprep Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ovprep {

/// Stable error codes. The string forms are part of the public contract and
/// are what host-language bindings surface.
enum class ErrorCode {
  kInvalidShape,
  kInvalidArgument,
  kBudgetExceeded,
  kPlanMismatch,
  kMarkerInText,
  kTokenizer,
  kSchema,
  kUnknownCategory,
  kDanglingPrompt,
  kDuplicateEntry,
  kInvalidPlan,
  kUnresolvedDataset,
  kIo,
  kFormat,
};

constexpr std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidShape: return "E_INVALID_SHAPE";
    case ErrorCode::kInvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::kBudgetExceeded: return "E_BUDGET_EXCEEDED";
    case ErrorCode::kPlanMismatch: return "E_PLAN_MISMATCH";
    case ErrorCode::kMarkerInText: return "E_MARKER_IN_TEXT";
    case ErrorCode::kTokenizer: return "E_TOKENIZER";
    case ErrorCode::kSchema: return "E_SCHEMA";
    case ErrorCode::kUnknownCategory: return "E_UNKNOWN_CATEGORY";
    case ErrorCode::kDanglingPrompt: return "E_DANGLING_PROMPT";
    case ErrorCode::kDuplicateEntry: return "E_DUPLICATE_ENTRY";
    case ErrorCode::kInvalidPlan: return "E_INVALID_PLAN";
    case ErrorCode::kUnresolvedDataset: return "E_UNRESOLVED_DATASET";
    case ErrorCode::kIo: return "E_IO";
    case ErrorCode::kFormat: return "E_FORMAT";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ovprep
