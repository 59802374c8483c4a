#pragma once

#include <stdexcept>
#include <string>

namespace fdo {

/// Base class of every error raised by the library. The CLI maps these to
/// exit code 2 ("data error").
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structurally malformed input (ragged CSV rows, wrong widths).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A cell could not be read as a finite number.
class ParseError : public Error {
public:
    ParseError(std::size_t row, std::size_t column, const std::string& cell)
        : Error("cannot parse '" + cell + "' as a number at row " + std::to_string(row) +
                ", column " + std::to_string(column)),
          row_(row),
          column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

/// An argument lies outside the domain of a mathematical function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Violated precondition on indices, counts or configuration.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class UnsupportedShapeError : public Error {
public:
    using Error::Error;
};

class IncompleteBasisError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// PCA features computed on rows that were also used to fit the basis.
class ContaminationError : public Error {
public:
    using Error::Error;
};

} // namespace fdo
