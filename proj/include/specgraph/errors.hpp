#pragma once

#include <stdexcept>
#include <string>

namespace specgraph {

// Base class for every failure raised by the library. The CLI maps the
// concrete type onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// graph
class DisconnectedGraph : public Error { using Error::Error; };
class NonPositiveLength : public Error { using Error::Error; };
class SelfLoop : public Error { using Error::Error; };
class DimensionMismatch : public Error { using Error::Error; };
class InvalidGraph : public Error { using Error::Error; };

// secular
class TooLarge : public Error { using Error::Error; };
class NonUnitary : public Error { using Error::Error; };

// roots
class NonRealZero : public Error {
 public:
  NonRealZero(const std::string& what, double re, double im)
      : Error(what), re_(re), im_(im) {}
  double real_part() const noexcept { return re_; }
  double imag_part() const noexcept { return im_; }

 private:
  double re_;
  double im_;
};
class CloseZeros : public Error { using Error::Error; };
class TooFewZeros : public Error { using Error::Error; };
class BootstrapViolation : public Error { using Error::Error; };

// orbits
class Explosion : public Error { using Error::Error; };

// series
class MissingLevelData : public Error { using Error::Error; };

// stats
class FourierArtifact : public Error { using Error::Error; };
class GridMismatch : public Error { using Error::Error; };

// io
class ParseError : public Error { using Error::Error; };

}  // namespace specgraph
