#pragma once

#include <stdexcept>
#include <string>

namespace lorentz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rejected (epsilon, nu) pair.
class ParamError : public Error {
public:
    enum class Kind { out_of_range, range_overflow };

    ParamError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// crossing_coordinates() was given a ray that never touches the cell.
class NoEntryError : public Error {
public:
    using Error::Error;
};

/// specular_reflect() was given an outgoing velocity.
class NotIncomingError : public Error {
public:
    using Error::Error;
};

/// Collision count guard tripped; the parameters are far outside the low-density regime.
class StepLimitError : public Error {
public:
    using Error::Error;
};

/// Replaying a stored trajectory did not reproduce its events.
class InconsistentError : public Error {
public:
    using Error::Error;
};

/// A cell passage with collision probability >= 1.
class DegenerateCellError : public Error {
public:
    using Error::Error;
};

/// Statistic requested on an empty sample.
class EmptySampleError : public Error {
public:
    using Error::Error;
};

class GridMismatchError : public Error {
public:
    using Error::Error;
};

class HorizonMismatchError : public Error {
public:
    using Error::Error;
};

}  // namespace lorentz
