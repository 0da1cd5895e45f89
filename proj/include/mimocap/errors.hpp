#ifndef MIMOCAP_ERRORS_HPP
#define MIMOCAP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mimocap {

struct ZeroMatrixError : std::runtime_error {
  explicit ZeroMatrixError(const std::string& m) : std::runtime_error(m) {}
};

struct NonPositivePowerError : std::runtime_error {
  explicit NonPositivePowerError(const std::string& m) : std::runtime_error(m) {}
};

struct NotPositiveDefiniteError : std::runtime_error {
  explicit NotPositiveDefiniteError(const std::string& m) : std::runtime_error(m) {}
};

struct DegenerateChannelError : std::runtime_error {
  explicit DegenerateChannelError(const std::string& m) : std::runtime_error(m) {}
};

struct NoBasisError : std::runtime_error {
  explicit NoBasisError(const std::string& m) : std::runtime_error(m) {}
};

struct OutsideZonotopeError : std::runtime_error {
  explicit OutsideZonotopeError(const std::string& m) : std::runtime_error(m) {}
};

struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& m) : std::runtime_error(m) {}
};

struct NonConvergenceError : std::runtime_error {
  explicit NonConvergenceError(const std::string& m) : std::runtime_error(m) {}
};

struct TooLargeError : std::runtime_error {
  explicit TooLargeError(const std::string& m) : std::runtime_error(m) {}
};

struct OutOfRangeError : std::runtime_error {
  explicit OutOfRangeError(const std::string& m) : std::runtime_error(m) {}
};

struct UnreachableError : std::runtime_error {
  explicit UnreachableError(const std::string& m) : std::runtime_error(m) {}
};

struct EmptyIntervalError : std::runtime_error {
  explicit EmptyIntervalError(const std::string& m) : std::runtime_error(m) {}
};

struct SquareFullRankError : std::runtime_error {
  explicit SquareFullRankError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace mimocap

#endif
