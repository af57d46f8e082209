#pragma once

#include <stdexcept>
#include <string>

namespace scenegen {

// Root of every error thrown by the library. Subclasses carry enough context
// for the CLI to map them onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class CredentialError : public Error {
public:
    using Error::Error;
};

/// Raised when model output does not follow the expected response skeleton.
/// `section()` names the missing or malformed part so it can be fed back.
class ParseError : public Error {
public:
    ParseError(std::string section, const std::string& message)
        : Error(message), section_(std::move(section)) {}

    const std::string& section() const noexcept { return section_; }

private:
    std::string section_;
};

class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error(stage + ": " + message), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class AllocationInfeasibleError : public Error {
public:
    using Error::Error;
};

class OracleCapacityError : public Error {
public:
    using Error::Error;
};

class CodegenError : public Error {
public:
    using Error::Error;
};

} // namespace scenegen
