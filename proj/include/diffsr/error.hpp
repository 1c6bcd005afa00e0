#pragma once

#include <stdexcept>
#include <string>

namespace diffsr {

// Error categories surfaced by the CLI as "error:<category>: <message>"
// and mapped to distinct exit codes.
enum class ErrorCategory {
    usage,    // bad arguments or config
    io,       // unreadable/unwritable files
    format,   // malformed file contents (PNG, manifest, checkpoint)
    shape,    // dimension/range mismatches
    numeric,  // non-finite values where finite ones are required
};

const char* to_string(ErrorCategory cat);

// Process exit code for a category (usage=2, io=3, format=4, shape=5,
// numeric=6; 1 is reserved for unexpected exceptions).
int exit_code(ErrorCategory cat);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), cat_(cat) {}
    ErrorCategory category() const { return cat_; }

private:
    ErrorCategory cat_;
};

[[noreturn]] inline void fail(ErrorCategory cat, const std::string& msg) {
    throw Error(cat, msg);
}

} // namespace diffsr
