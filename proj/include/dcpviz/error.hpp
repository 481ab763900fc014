#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace dcpviz {

// Base for every error raised by the library. `code()` is a stable,
// machine-readable snake_case identifier; what() carries the human detail.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Module-scoped error carrying a typed enum alongside the string code.
template <typename Errc>
class ModuleError : public Error {
public:
    ModuleError(Errc errc, const std::string& message)
        : Error(to_code(errc), message), errc_(errc) {}

    Errc errc() const noexcept { return errc_; }

private:
    Errc errc_;
};

} // namespace dcpviz
