#ifndef NILWALK__ERROR_HPP_
#define NILWALK__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace nilwalk {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

#define NILWALK_DEFINE_ERROR(Name)          \
  class Name : public Error                 \
  {                                         \
  public:                                   \
    explicit Name(const std::string & what) \
        : Error(#Name ": " + what)          \
    {}                                      \
  };

// group algebra
NILWALK_DEFINE_ERROR(UnsupportedStep)
NILWALK_DEFINE_ERROR(DimensionMismatch)
NILWALK_DEFINE_ERROR(NegativeEps)
NILWALK_DEFINE_ERROR(InvalidAlgebra)
NILWALK_DEFINE_ERROR(OptimizerFailure)

// quotient graph and albanese pipeline
NILWALK_DEFINE_ERROR(StochasticityViolation)
NILWALK_DEFINE_ERROR(InvolutionViolation)
NILWALK_DEFINE_ERROR(VoltageInverseViolation)
NILWALK_DEFINE_ERROR(NotStronglyConnected)
NILWALK_DEFINE_ERROR(SingularSystem)
NILWALK_DEFINE_ERROR(SingularSigma)

// walker and rate functions
NILWALK_DEFINE_ERROR(ScalingDomain)
NILWALK_DEFINE_ERROR(NonIncreasingTimes)
NILWALK_DEFINE_ERROR(InvalidArgument)

// experiments and io
NILWALK_DEFINE_ERROR(SchemaError)
NILWALK_DEFINE_ERROR(ConfigError)
NILWALK_DEFINE_ERROR(OracleUnavailable)

#undef NILWALK_DEFINE_ERROR

}  // namespace nilwalk

#endif  // NILWALK__ERROR_HPP_
