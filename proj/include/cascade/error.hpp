#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

enum class ErrorCode {
    EmptyStructure,
    UnresolvedReference,
    DuplicatePosition,
    BadWeights,
    NegativeAmount,
    InvalidStructure,
    ValidationError,
    UnknownMetric,
    NegativeInput,
    LengthMismatch,
    InconsistentTrace,
    BadCorrelation,
    InvalidPool,
    TooLarge,
    UnsupportedDependence,
    RaggedInput,
    EmptyInput,
    WeightMismatch,
    BadLevel,
    BadCurve,
    UnknownPosition,
    BudgetExceeded,
    EmptyFeasibleSet,
    InvalidDesign,
    SyntaxError,
    SchemaError,
    ParseError,
    IoError,
    Overflow,
};

std::string_view to_string(ErrorCode code);

// A domain error. Validation failures carry every violation found, not just the first.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::vector<Error> details = {})
        : std::runtime_error(message), code_(code), details_(std::move(details)) {}

    ErrorCode code() const { return code_; }
    const std::vector<Error>& details() const { return details_; }

    // Machine-readable rendering: {"error": ..., "message": ..., "details": [...]}.
    std::string to_json() const;

private:
    ErrorCode code_;
    std::vector<Error> details_;
};

}  // namespace cascade
