#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace msm {

using NodeId = std::uint32_t;
using NodeTypeId = std::uint32_t;
using EdgeTypeId = std::uint32_t;

inline constexpr NodeId kInvalidNode = static_cast<NodeId>(-1);

// Error categories map one-to-one onto the CLI process exit codes.
enum class ErrorCode : int {
  kUsage = 2,
  kData = 3,
  kNumeric = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Malformed or inconsistent input: files, graphs, registries, configs.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorCode::kData, what) {}
};

// Non-finite values or other numeric breakdown during computation.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorCode::kNumeric, what) {}
};

}  // namespace msm
