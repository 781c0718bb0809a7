#pragma once

#include <stdexcept>
#include <string>

namespace gradmetric {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// tensor layer
struct InvalidIndexGroup : Error { using Error::Error; };
struct InvalidContraction : Error { using Error::Error; };
struct DegenerateForm : Error { using Error::Error; };

// jet layer
struct SpecParseError : Error { using Error::Error; };
struct SpecDimensionError : Error { using Error::Error; };
struct OrderExceeded : Error { using Error::Error; };
struct BaseMismatch : Error { using Error::Error; };

// tensor equations
struct InvalidOrder : Error { using Error::Error; };
struct ProblemTooLarge : Error { using Error::Error; };

// metric construction
struct NotCritical : Error { using Error::Error; };
struct ZeroCovector : Error { using Error::Error; };
struct NonPositivePairing : Error { using Error::Error; };
struct CoverageGap : Error { using Error::Error; };

// quantum layer
struct InvalidHamiltonian : Error { using Error::Error; };
struct NotErgodic : Error { using Error::Error; };
struct SingularState : Error { using Error::Error; };
struct NotTangent : Error { using Error::Error; };
struct StepTooLarge : Error { using Error::Error; };

}  // namespace gradmetric
