#pragma once

#include <stdexcept>
#include <string>

namespace dsense {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidGeometry : public Error {
public:
    using Error::Error;
};

class EmptyLayoutError : public Error {
public:
    using Error::Error;
};

// Inputs outside an operation's domain (mismatched id sets, empty pools, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Network-level failure talking to an external service; callers may retry.
class TransportError : public Error {
public:
    using Error::Error;
    bool retryable() const noexcept { return true; }
};

// The remote answered, but with something we cannot use.
class ProtocolError : public Error {
public:
    ProtocolError(const std::string& what, std::string excerpt = {})
        : Error(excerpt.empty() ? what : what + ": " + excerpt), excerpt_(std::move(excerpt)) {}

    const std::string& excerpt() const noexcept { return excerpt_; }

private:
    std::string excerpt_;
};

// Schema violation while decoding a file; `where` is "line N" and/or a field path.
class ParseError : public Error {
public:
    ParseError(const std::string& where, const std::string& what)
        : Error(where + ": " + what), where_(where) {}

    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

class IntegrityError : public Error {
public:
    using Error::Error;
};

}  // namespace dsense
