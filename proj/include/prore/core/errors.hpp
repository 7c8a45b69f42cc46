#pragma once

#include <stdexcept>
#include <string>

namespace prore {

// Base for all library errors so callers can catch prore failures in one net.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InputError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    using Error::Error;
};

class CassetteError : public Error {
public:
    using Error::Error;
};

class RenderError : public Error {
public:
    using Error::Error;
};

class EnvError : public Error {
public:
    using Error::Error;
};

class NoMatchError : public Error {
public:
    NoMatchError(const std::string& what, double best) : Error(what), best_score(best) {}
    double best_score = 0.0;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace prore
