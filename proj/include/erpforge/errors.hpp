#pragma once

#include <stdexcept>
#include <string>

namespace erpforge {

// Base class for all domain errors raised by the library. CLI maps these to
// exit code 1; usage/IO problems are reported separately with exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define ERPFORGE_DEFINE_ERROR(NAME)                            \
  class NAME : public Error {                                  \
   public:                                                     \
    explicit NAME(const std::string& what) : Error(what) {}    \
  }

// bdf
ERPFORGE_DEFINE_ERROR(MalformedHeader);
ERPFORGE_DEFINE_ERROR(TruncatedRecords);
ERPFORGE_DEFINE_ERROR(InconsistentShape);

// dsp
ERPFORGE_DEFINE_ERROR(InvalidBand);
ERPFORGE_DEFINE_ERROR(TooShort);

// spatial
ERPFORGE_DEFINE_ERROR(SingularCovariance);
ERPFORGE_DEFINE_ERROR(MissingClass);

// augment
ERPFORGE_DEFINE_ERROR(ShiftTooLarge);

// nn
ERPFORGE_DEFINE_ERROR(ShapeMismatch);
ERPFORGE_DEFINE_ERROR(DegenerateBatch);
ERPFORGE_DEFINE_ERROR(NotForwarded);
ERPFORGE_DEFINE_ERROR(InvalidProb);
ERPFORGE_DEFINE_ERROR(InvalidSpec);

// eval
ERPFORGE_DEFINE_ERROR(TooFewSamples);
ERPFORGE_DEFINE_ERROR(ZeroVariance);

// config / IO
ERPFORGE_DEFINE_ERROR(ConfigError);
ERPFORGE_DEFINE_ERROR(IoError);

#undef ERPFORGE_DEFINE_ERROR

}  // namespace erpforge
