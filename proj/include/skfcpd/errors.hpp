#pragma once

#include <stdexcept>
#include <string>

namespace skfcpd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Time grid is not strictly increasing or spacings are too small.
class InvalidGrid : public Error {
public:
    using Error::Error;
};

/// A model or algorithm parameter is out of its domain.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Caller supplied malformed input (non-monotone times, bad indices, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Predictive variance or quadratic form collapsed below its floor.
class ConditioningError : public Error {
public:
    using Error::Error;
};

/// No finite likelihood evaluation was found by the optimizer.
class EstimationFailed : public Error {
public:
    using Error::Error;
};

/// ARL calibration could not bracket or reach the target.
class CalibrationFailed : public Error {
public:
    using Error::Error;
};

/// Unparseable or inconsistent data files.
class DataError : public Error {
public:
    using Error::Error;
};

}  // namespace skfcpd
