#pragma once

#include <stdexcept>
#include <string>

namespace mtloop {

// Raised for violated preconditions and malformed inputs across the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an on-disk artifact cannot be read or parsed.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Raised when persisted state cannot be written.
class StorageError : public Error {
 public:
  using Error::Error;
};

}  // namespace mtloop
