#pragma once

#include <stdexcept>
#include <string>

namespace condsql {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file or record.
class ParseError : public Error {
public:
    using Error::Error;
};

// A file could not be opened or written.
class IoError : public Error {
public:
    using Error::Error;
};

// Well-formed record that breaks a schema invariant (bad index, unknown table).
class ValidationError : public Error {
public:
    using Error::Error;
};

// execute() was handed a query that fails rule validation.
class RuntimeViolation : public Error {
public:
    using Error::Error;
};

}  // namespace condsql
