#pragma once

#include <stdexcept>
#include <string>

namespace crisp {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for malformed user configuration; the CLI maps it to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

#define CRISP_DEFINE_ERROR(Name, Base)          \
    class Name : public Base {                  \
    public:                                     \
        using Base::Base;                       \
    }

// embedding primitives
CRISP_DEFINE_ERROR(ZeroVectorError, Error);
CRISP_DEFINE_ERROR(DimensionMismatchError, Error);
CRISP_DEFINE_ERROR(EmptyTargetRowError, Error);

// contrastive objectives
CRISP_DEFINE_ERROR(NonBijectivePairingError, Error);
CRISP_DEFINE_ERROR(NonPositiveTemperatureError, Error);
CRISP_DEFINE_ERROR(MissingCoordinatesError, Error);
CRISP_DEFINE_ERROR(CropLargerThanImageError, Error);

// geography and splitting
CRISP_DEFINE_ERROR(InvalidCoordinateError, Error);
CRISP_DEFINE_ERROR(EmptyBlockSetError, Error);
CRISP_DEFINE_ERROR(UncoveredBlockError, Error);
CRISP_DEFINE_ERROR(EmptySetError, Error);

// synthetic data
CRISP_DEFINE_ERROR(InvalidConfigError, ConfigError);

// training
CRISP_DEFINE_ERROR(ShapeMismatchError, Error);
CRISP_DEFINE_ERROR(InvalidTargetError, Error);
CRISP_DEFINE_ERROR(EmptySubsetError, Error);

// metrics and clustering
CRISP_DEFINE_ERROR(MissingGroupError, Error);
CRISP_DEFINE_ERROR(MissingBinsError, Error);
CRISP_DEFINE_ERROR(TooFewPointsError, Error);
CRISP_DEFINE_ERROR(UnsupportedFormatError, ConfigError);

// file formats
CRISP_DEFINE_ERROR(FormatError, Error);

#undef CRISP_DEFINE_ERROR

}  // namespace crisp
