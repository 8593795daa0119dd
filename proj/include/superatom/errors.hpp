#ifndef SUPERATOM_ERRORS_HPP
#define SUPERATOM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace superatom {

// Bad parameter or input value. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Optimizer failed to meet its termination criteria. Exit code 3.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be read or written. Exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

template <typename Scalar>
inline bool is_probability(Scalar p) {
  return p >= Scalar(0) && p <= Scalar(1);
}

}  // namespace superatom

#endif
