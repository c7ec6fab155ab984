#ifndef QMIDX_ERROR_HPP
#define QMIDX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace qmidx {

// Root of the library's exception hierarchy. The CLI maps anything derived
// from Error to exit code 2 (data/validation error).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class BuildError : public Error {
public:
    using Error::Error;
};

// A decision function produced something that is not a child of its node.
class StructuralError : public Error {
public:
    using Error::Error;
};

class ArchiveError : public Error {
public:
    using Error::Error;
};

// A theorem hypothesis or a mathematical precondition does not hold.
class DomainError : public Error {
public:
    using Error::Error;
};

} // namespace qmidx

#endif // QMIDX_ERROR_HPP
