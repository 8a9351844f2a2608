#pragma once

#include <stdexcept>
#include <string>

namespace goafem
{

// Base of all library errors. The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments or violated preconditions (bad index, mismatched meshes, ...).
class InvalidArgument : public Error
{
public:
  using Error::Error;
};

// File could not be read or written.
class IoError : public Error
{
public:
  using Error::Error;
};

// Malformed or unknown configuration.
class ConfigError : public Error
{
public:
  using Error::Error;
};

// Breakdown of a numerical procedure (non-SPD system, Newton divergence, ...).
class NumericalError : public Error
{
public:
  using Error::Error;
};

}  // namespace goafem
