#include "cascade/error.hpp"

#include <nlohmann/json.hpp>

namespace cascade {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyStructure: return "EmptyStructure";
        case ErrorCode::UnresolvedReference: return "UnresolvedReference";
        case ErrorCode::DuplicatePosition: return "DuplicatePosition";
        case ErrorCode::BadWeights: return "BadWeights";
        case ErrorCode::NegativeAmount: return "NegativeAmount";
        case ErrorCode::InvalidStructure: return "InvalidStructure";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::UnknownMetric: return "UnknownMetric";
        case ErrorCode::NegativeInput: return "NegativeInput";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::InconsistentTrace: return "InconsistentTrace";
        case ErrorCode::BadCorrelation: return "BadCorrelation";
        case ErrorCode::InvalidPool: return "InvalidPool";
        case ErrorCode::TooLarge: return "TooLarge";
        case ErrorCode::UnsupportedDependence: return "UnsupportedDependence";
        case ErrorCode::RaggedInput: return "RaggedInput";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::WeightMismatch: return "WeightMismatch";
        case ErrorCode::BadLevel: return "BadLevel";
        case ErrorCode::BadCurve: return "BadCurve";
        case ErrorCode::UnknownPosition: return "UnknownPosition";
        case ErrorCode::BudgetExceeded: return "BudgetExceeded";
        case ErrorCode::EmptyFeasibleSet: return "EmptyFeasibleSet";
        case ErrorCode::InvalidDesign: return "InvalidDesign";
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::Overflow: return "Overflow";
    }
    return "Unknown";
}

namespace {

nlohmann::json as_json(const Error& e) {
    nlohmann::json j{{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
    if (!e.details().empty()) {
        auto& details = j["details"] = nlohmann::json::array();
        for (const auto& d : e.details()) details.push_back(as_json(d));
    }
    return j;
}

}  // namespace

std::string Error::to_json() const { return as_json(*this).dump(); }

}  // namespace cascade
