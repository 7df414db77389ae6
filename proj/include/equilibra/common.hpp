#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace equilibra
{

using Index = std::int32_t;
using Point = Eigen::Vector2d;

/// Invalid parameter combination (polynomial degrees, marking parameter,
/// unknown config key, ...).
class ConfigurationError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or degenerate mesh input.
class MeshError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A global or patch-local linear system could not be factorised.
class SingularSystemError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Selects the serial reference loop or the OpenMP loop of a kernel. Both
/// produce bitwise identical results.
enum class Execution
{
  Serial,
  Parallel,
};

} // namespace equilibra
