#pragma once

#include <stdexcept>

namespace cgemev {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureFailure : Error { using Error::Error; };
struct TruncationBudgetExceeded : Error { using Error::Error; };
struct NotPositiveDefinite : Error { using Error::Error; };
struct DegenerateInformation : Error { using Error::Error; };
struct DegenerateWeightedMean : Error { using Error::Error; };
struct EmbeddingNotPD : Error { using Error::Error; };
struct DenseTooLarge : Error { using Error::Error; };
struct EVNegative : Error { using Error::Error; };
struct NoSignChange : Error { using Error::Error; };
struct OptimizerStalled : Error { using Error::Error; };
struct ReparamOutOfBox : Error { using Error::Error; };
struct MismatchedConfig : Error { using Error::Error; };

} // namespace cgemev
