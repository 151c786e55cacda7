#pragma once

#include <stdexcept>
#include <string>

namespace gmmcov {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidPolygon : Error {
    using Error::Error;
};

struct CoincidentAgents : Error {
    using Error::Error;
};

struct OutsideOmega : Error {
    using Error::Error;
};

struct QuadratureNotConverged : Error {
    using Error::Error;
};

struct MissingPartials : Error {
    using Error::Error;
};

// Scenario files.
struct ParseError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace gmmcov
