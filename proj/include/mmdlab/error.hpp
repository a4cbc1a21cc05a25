#pragma once

#include <stdexcept>
#include <string>

namespace mmdlab {

// Base of every error raised by the library. The CLI maps the concrete
// kinds onto its exit-code contract.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Violated precondition or invariant of a constructed object.
class ContractError : public Error {
public:
    using Error::Error;
};

// A size budget (nodes, subsets, representatives) would be exceeded.
class ResourceError : public Error {
public:
    using Error::Error;
};

// Sampling grid too coarse for the requested separation scale.
class PrecisionError : public Error {
public:
    using Error::Error;
};

// An input file could not be opened.
class FileError : public Error {
public:
    using Error::Error;
};

// Malformed text input.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace mmdlab
