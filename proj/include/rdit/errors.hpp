#pragma once

#include <stdexcept>
#include <string>

namespace rdit {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape/dimension mismatch between tensors.
struct DimensionError : Error {
    using Error::Error;
};

// Non-finite value produced by a tensor op.
struct NumericError : Error {
    using Error::Error;
};

// Region division or mask partition violations.
struct RegionError : Error {
    using Error::Error;
};

// Wrong embedding source fed into a projection path.
struct SourceError : Error {
    using Error::Error;
};

// Bad config file contents; exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// Mid-pipeline failure; exit code 3.
struct PipelineError : Error {
    using Error::Error;
};

// Network/HTTP failure after retries; exit code 4.
struct TransportError : Error {
    using Error::Error;
};

// LLM response parsed but violates the ProgressivePrompt schema.
struct SchemaError : Error {
    SchemaError(const std::string& what, std::string raw_response)
        : Error(what), raw(std::move(raw_response)) {}
    std::string raw;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace rdit
