#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace facegen {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Input that is malformed or violates a documented contract. The CLI maps
// every subclass of this to exit code 2.
class ValidationError : public Error {
   public:
    using Error::Error;
};

class ArgumentError : public ValidationError {
   public:
    using ValidationError::ValidationError;
};

class SchemaError : public ValidationError {
   public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
   public:
    ParseError(const std::string& what, std::size_t line)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

   private:
    std::size_t line_;
};

// Two mentions of the same attribute with different options.
class AmbiguityError : public ValidationError {
   public:
    AmbiguityError(const std::string& what, std::string first, std::string second)
        : ValidationError(what), first_(std::move(first)), second_(std::move(second)) {}
    const std::string& first_phrase() const { return first_; }
    const std::string& second_phrase() const { return second_; }

   private:
    std::string first_, second_;
};

// Not enough independent data for the requested decomposition.
class RankError : public Error {
   public:
    using Error::Error;
};

class NumericalError : public Error {
   public:
    using Error::Error;
};

class TrainingDiverged : public NumericalError {
   public:
    TrainingDiverged(const std::string& what, std::size_t at)
        : NumericalError(what + " (at " + std::to_string(at) + ")"), at_(at) {}
    std::size_t at() const { return at_; }

   private:
    std::size_t at_;
};

class IoError : public Error {
   public:
    using Error::Error;
};

}  // namespace facegen
