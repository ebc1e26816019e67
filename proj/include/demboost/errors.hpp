#pragma once

#include <stdexcept>
#include <string>

namespace demboost {

// Error categories map onto CLI exit codes:
//   IoError -> 2, EmptyDatasetError -> 3, FeatureMismatchError -> 4,
//   AlignmentError -> 5, everything else -> 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Missing or unreadable/unwritable files.
class IoError : public Error {
public:
    using Error::Error;
};

// A table ended up with zero usable rows.
class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

// Model feature names do not match the features on disk.
class FeatureMismatchError : public Error {
public:
    using Error::Error;
};

// Grids that were required to share a spatial frame do not.
class AlignmentError : public Error {
public:
    using Error::Error;
};

// Malformed text input; carries the 1-based line number of the offence.
class ParseError : public Error {
public:
    ParseError(const std::string& message, long line)
        : Error(message + " (line " + std::to_string(line) + ")"), line_(line) {}

    long line() const noexcept { return line_; }

private:
    long line_;
};

}  // namespace demboost
