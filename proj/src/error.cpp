#include "ciaf/error.hpp"

namespace ciaf {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::RowError: return "RowError";
    case ErrorKind::EmptySelection: return "EmptySelection";
    case ErrorKind::AllMissing: return "AllMissing";
    case ErrorKind::UnknownFeature: return "UnknownFeature";
    case ErrorKind::ScaleMismatch: return "ScaleMismatch";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::UnknownAttack: return "UnknownAttack";
    case ErrorKind::MissingFeature: return "MissingFeature";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::ReplayMiss: return "ReplayMiss";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

namespace {

std::string unknown_attack_message(const std::string& query,
                                   const std::vector<std::string>& suggestions) {
    std::string msg = "unknown attack '" + query + "'";
    if (!suggestions.empty()) {
        msg += "; did you mean: ";
        for (std::size_t i = 0; i < suggestions.size(); ++i) {
            if (i != 0)
                msg += ", ";
            msg += suggestions[i];
        }
    }
    return msg;
}

} // namespace

UnknownAttackError::UnknownAttackError(std::string query, std::vector<std::string> suggestions)
    : Error(ErrorKind::UnknownAttack, unknown_attack_message(query, suggestions)),
      query_(std::move(query)),
      suggestions_(std::move(suggestions)) {}

ExitCode exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Io:
        return ExitCode::Io;
    case ErrorKind::BackendUnavailable:
    case ErrorKind::ReplayMiss:
        return ExitCode::Backend;
    default:
        return ExitCode::Validation;
    }
}

} // namespace ciaf
