#pragma once

#include <stdexcept>
#include <string>

namespace ndd {

// Base of every error thrown by the library; callers that only care about
// "something in ndd failed" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class StateError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what, int layer = -1)
        : Error(what), layer_(layer) {}

    /// Index of the offending network layer, or -1 when not layer-specific.
    int layer() const noexcept { return layer_; }

private:
    int layer_;
};

}  // namespace ndd
