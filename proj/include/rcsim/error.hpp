#pragma once

#include <stdexcept>
#include <string>

namespace rcsim {

// Error with a stable machine-readable code ("size-too-small",
// "enumeration-cap-exceeded", ...) alongside the human message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

}  // namespace rcsim
