#pragma once

#include <stdexcept>
#include <string>

namespace fpscore {

// Base class for every error raised by the library. Operation errors carry a
// short human-readable message; callers match on the dynamic type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class RemoteError : public Error {
public:
    using Error::Error;
};

} // namespace fpscore
