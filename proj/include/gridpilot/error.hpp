#pragma once

#include <stdexcept>
#include <string>

namespace gridpilot {

// Every failure the library reports carries a short machine-readable code
// ("policy-not-converged", "invalid-direction", ...) next to the message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& detail)
        : std::runtime_error(detail.empty() ? code : code + ": " + detail), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

}  // namespace gridpilot
