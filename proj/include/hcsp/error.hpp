#pragma once

#include <stdexcept>
#include <string>

namespace hcsp {

/// Error categories. The CLI maps these onto its exit-code table.
enum class ErrorKind {
    Load,        // a file could not be read
    Io,          // a file could not be written
    Schema,      // well-formed input that violates the data model
    Parameter,   // an operation precondition was violated
    Training,    // not enough data to fit a model
    Numerical,   // a decomposition failed or was too ill-conditioned
    Model,       // model and input are incompatible
    Config,      // a run-config field is invalid
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::Load: return "load error";
        case ErrorKind::Io: return "write error";
        case ErrorKind::Schema: return "schema error";
        case ErrorKind::Parameter: return "parameter error";
        case ErrorKind::Training: return "training error";
        case ErrorKind::Numerical: return "numerical error";
        case ErrorKind::Model: return "model error";
        case ErrorKind::Config: return "config error";
    }
    return "error";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace hcsp
