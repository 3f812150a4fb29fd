#pragma once

#include <stdexcept>
#include <string>

namespace vms {

// Root of every error the library raises. Subclasses name the failed contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VMS_DEFINE_ERROR(Name)         \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

VMS_DEFINE_ERROR(ShapeMismatch);
VMS_DEFINE_ERROR(NonFinite);
VMS_DEFINE_ERROR(NonPositiveDelta);
VMS_DEFINE_ERROR(NonNegativeA);
VMS_DEFINE_ERROR(TimeVaryingParams);
VMS_DEFINE_ERROR(OddInnerWidth);
VMS_DEFINE_ERROR(EmptyVideo);
VMS_DEFINE_ERROR(LayoutMismatch);
VMS_DEFINE_ERROR(InsufficientPoints);
VMS_DEFINE_ERROR(RatioMismatch);
VMS_DEFINE_ERROR(DivergedLoss);
VMS_DEFINE_ERROR(GoldenMismatch);
VMS_DEFINE_ERROR(FormatError);
VMS_DEFINE_ERROR(InvalidArgument);

#undef VMS_DEFINE_ERROR

}  // namespace vms
