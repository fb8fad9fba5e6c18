#ifndef MCDM_ERRORS_HPP
#define MCDM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mcdm {

// Base of every error raised by the library. Catch this in front-ends.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MCDM_DEFINE_ERROR(Name)        \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

// linalg
MCDM_DEFINE_ERROR(NotPositiveDefinite);
MCDM_DEFINE_ERROR(NotSymmetric);
MCDM_DEFINE_ERROR(ConvergenceFailure);
MCDM_DEFINE_ERROR(RankOutOfRange);

// design
MCDM_DEFINE_ERROR(EmptyTermSet);
MCDM_DEFINE_ERROR(TermOutOfRange);
MCDM_DEFINE_ERROR(RankDeficient);
MCDM_DEFINE_ERROR(ZeroVariance);
MCDM_DEFINE_ERROR(HierarchyViolation);

// model / fitter
MCDM_DEFINE_ERROR(DimensionMismatch);
MCDM_DEFINE_ERROR(ProbabilityUnderflow);
MCDM_DEFINE_ERROR(SingularNormalEquations);
MCDM_DEFINE_ERROR(Diverged);
MCDM_DEFINE_ERROR(UnidentifiableMask);
MCDM_DEFINE_ERROR(InvalidOptions);

// interpret / select
MCDM_DEFINE_ERROR(TargetNotInModel);
MCDM_DEFINE_ERROR(InvalidLevel);

// ingestion
MCDM_DEFINE_ERROR(ParseError);
MCDM_DEFINE_ERROR(UnknownLabel);
MCDM_DEFINE_ERROR(ConfigError);

#undef MCDM_DEFINE_ERROR

}  // namespace mcdm

#endif  // MCDM_ERRORS_HPP
