#include "diffsr/error.hpp"

namespace diffsr {

const char* to_string(ErrorCategory cat) {
    switch (cat) {
        case ErrorCategory::usage: return "usage";
        case ErrorCategory::io: return "io";
        case ErrorCategory::format: return "format";
        case ErrorCategory::shape: return "shape";
        case ErrorCategory::numeric: return "numeric";
    }
    return "unknown";
}

int exit_code(ErrorCategory cat) {
    switch (cat) {
        case ErrorCategory::usage: return 2;
        case ErrorCategory::io: return 3;
        case ErrorCategory::format: return 4;
        case ErrorCategory::shape: return 5;
        case ErrorCategory::numeric: return 6;
    }
    return 1;
}

} // namespace diffsr
