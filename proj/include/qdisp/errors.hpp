#ifndef QDISP_ERRORS_HPP
#define QDISP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qdisp {

// Every failure raised by the library derives from Error, so callers that do
// not care about the category can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// linalg
class NotHermitian : public Error { using Error::Error; };
class NotPsd : public Error { using Error::Error; };
class NoConvergence : public Error { using Error::Error; };
class DimensionMismatch : public Error { using Error::Error; };

// analytic
class InvalidState : public Error { using Error::Error; };
class NotDensity : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class EmptyGrid : public Error { using Error::Error; };
class NoSolution : public Error { using Error::Error; };
// A threshold level outside [0, C(0)] has no solution either.
class BadThreshold : public NoSolution { using NoSolution::NoSolution; };

// lindblad
class TruncationTooSmall : public Error { using Error::Error; };
class StepTooLarge : public Error { using Error::Error; };
class MemoryBudget : public Error { using Error::Error; };

}  // namespace qdisp

#endif  // QDISP_ERRORS_HPP
