#pragma once

#include <stdexcept>
#include <string>

namespace hessae {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct TrainingError : Error {
    using Error::Error;
};

struct SerializationError : Error {
    using Error::Error;
};

}  // namespace hessae
