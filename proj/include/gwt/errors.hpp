#pragma once

#include <stdexcept>
#include <string>

namespace gwt {

// All toolkit errors derive from Error so callers can catch one type;
// the concrete class name is the machine-readable error code.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
  virtual const char* code() const noexcept { return "Error"; }
};

#define GWT_DEFINE_ERROR(Name)                                   \
  struct Name : Error {                                          \
    using Error::Error;                                          \
    const char* code() const noexcept override { return #Name; } \
  }

GWT_DEFINE_ERROR(ParseError);
GWT_DEFINE_ERROR(ValidationError);
GWT_DEFINE_ERROR(IoError);
GWT_DEFINE_ERROR(MarginalError);
GWT_DEFINE_ERROR(InfeasibleError);
GWT_DEFINE_ERROR(ZeroRowError);
GWT_DEFINE_ERROR(DimensionMismatch);
GWT_DEFINE_ERROR(NoPointsError);
GWT_DEFINE_ERROR(RefMismatch);
GWT_DEFINE_ERROR(TooFewPixels);
GWT_DEFINE_ERROR(NonTriangleFace);
GWT_DEFINE_ERROR(DisconnectedMesh);
GWT_DEFINE_ERROR(ClassTooSmall);
GWT_DEFINE_ERROR(IdMismatch);
GWT_DEFINE_ERROR(DegenerateVariance);

#undef GWT_DEFINE_ERROR

}  // namespace gwt
