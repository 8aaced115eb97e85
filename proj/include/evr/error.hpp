#pragma once

#include <stdexcept>
#include <string>

namespace evr {

// Every error carries a stable machine-readable code. The HTTP layer and the
// CLI map the subclass to a status / exit code; the code string is surfaced
// verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Bad input: precondition violations, malformed records, out-of-range values.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Referenced entity does not exist (unknown doc id, item, session, run).
class NotFoundError : public Error {
public:
    using Error::Error;
};

// Caller is authenticated but not allowed to touch the resource.
class ForbiddenError : public Error {
public:
    using Error::Error;
};

// Provider / network failure. Retrying the same call may succeed.
class TransportError : public Error {
public:
    TransportError(std::string code, const std::string& message, bool timeout = false)
        : Error(std::move(code), message), timeout_(timeout) {}

    bool timeout() const noexcept { return timeout_; }

private:
    bool timeout_;
};

}  // namespace evr
