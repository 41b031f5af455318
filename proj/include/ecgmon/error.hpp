#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ecgmon {

// Typed runtime error carrying a stable, kebab-case code. The code is part of
// the library contract: callers (and the CLI, which prints it on stderr)
// branch on `code()`, never on the human-readable message.
//
// Codes in use:
//   invalid-parameter invalid-input insufficient-data insufficient-beats
//   degenerate-input degenerate-batch io-error schema-error class-mismatch
//   empty-dataset stratification-error shape-error format-error version-error
//   corrupt-frame malformed-frame empty-session internal
class Error : public std::runtime_error {
public:
    Error(std::string code, std::string message)
        : std::runtime_error(code + ": " + message),
          code_(std::move(code)),
          message_(std::move(message)) {}

    const std::string& code() const noexcept { return code_; }

    // The message without the leading code (what() includes the code).
    const std::string& message() const noexcept { return message_; }

private:
    std::string code_;
    std::string message_;
};

[[noreturn]] inline void raise(std::string code, const std::string& message) {
    throw Error(std::move(code), message);
}

}  // namespace ecgmon
