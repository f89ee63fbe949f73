#pragma once

#include <stdexcept>
#include <string>

namespace softlabel {

// Exit codes used by the command-line tool. Library code throws the matching
// exception type and the tool maps it to a status.
enum class ExitCode : int {
    Ok = 0,
    Usage = 2,
    Data = 3,
    Numeric = 4,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Bad invocation: unknown flag, invalid parameter value.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ExitCode::Usage, what) {}
};

/// Input violates a schema or a precondition on data (missing file, bad category, ...).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ExitCode::Data, what) {}
};

/// Non-finite loss or gradient, undefined weight.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ExitCode::Numeric, what) {}
};

}  // namespace softlabel
