#pragma once

#include <stdexcept>
#include <string>

namespace sd {

// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Syntax error in a text format; carries 1-based line/column.
struct parse_error : error {
    parse_error(std::string origin_, int line_, int col_, const std::string& what_)
        : error(origin_ + ":" + std::to_string(line_) + ":" + std::to_string(col_) +
                ": " + what_),
          origin(std::move(origin_)), line(line_), col(col_) {}
    std::string origin;
    int line;
    int col;
};

// Semantic error: a well-formed input that violates an invariant.
struct validation_error : error {
    using error::error;
};

} // namespace sd
