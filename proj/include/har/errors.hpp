#pragma once

#include <stdexcept>
#include <string>

namespace har {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operands disagree on dimensionality (vector lengths, model vs query).
struct DimensionError : Error {
    using Error::Error;
};

// Invalid hyperparameter or malformed configuration input.
struct ConfigError : Error {
    using Error::Error;
};

// Dataset file missing or unreadable.
struct AcquisitionError : Error {
    using Error::Error;
};

// Dataset files disagree with each other (row counts, listing sizes).
struct IntegrityError : Error {
    using Error::Error;
};

// A value inside a dataset file is out of range or unparseable.
struct ValidationError : Error {
    using Error::Error;
};

// A required class has no training samples.
struct CoverageError : Error {
    using Error::Error;
};

// A binary SVM problem where only one label is present.
struct DegenerateProblemError : Error {
    using Error::Error;
};

// evaluate() called with no samples.
struct EmptyEvaluationError : Error {
    using Error::Error;
};

// Non-finite model parameters.
struct CorruptionError : Error {
    using Error::Error;
};

// Training loss became NaN/inf; carries the failing epoch.
struct TrainingDivergedError : Error {
    int epoch;
    TrainingDivergedError(const std::string& msg, int failing_epoch)
        : Error(msg), epoch(failing_epoch) {}
};

}  // namespace har
