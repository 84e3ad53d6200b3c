#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ciaf {

enum class ErrorKind {
    MalformedHeader,
    RowError,
    EmptySelection,
    AllMissing,
    UnknownFeature,
    ScaleMismatch,
    SchemaError,
    ValidationError,
    UnknownAttack,
    MissingFeature,
    BackendUnavailable,
    ReplayMiss,
    LengthMismatch,
    UnknownLabel,
    InvalidArgument,
    Io,
};

const char* to_string(ErrorKind kind);

/// Base for every error the library raises. `kind()` is stable and is what
/// tests and the CLI dispatch on; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class UnknownAttackError : public Error {
public:
    UnknownAttackError(std::string query, std::vector<std::string> suggestions);

    const std::string& query() const noexcept { return query_; }
    const std::vector<std::string>& suggestions() const noexcept { return suggestions_; }

private:
    std::string query_;
    std::vector<std::string> suggestions_;
};

// CLI exit codes.
enum class ExitCode : int {
    Ok = 0,
    Validation = 2,
    Io = 3,
    Backend = 4,
};

ExitCode exit_code_for(ErrorKind kind);

} // namespace ciaf
