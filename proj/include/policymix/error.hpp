#pragma once

#include <stdexcept>
#include <string>

namespace policymix {

// Error categories map onto CLI exit codes: config -> 1, estimation -> 2, io -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct EstimationError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace policymix
