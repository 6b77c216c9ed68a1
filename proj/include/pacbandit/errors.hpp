#pragma once

#include <stdexcept>
#include <string>

namespace pacbandit {

enum class ErrorKind {
    Domain,
    DimensionMismatch,
    Boundary,
    NoUniformBound,
    NotSamplable,
    UndefinedEstimate,
    NonIid,
    BiasUnavailable,
    FiniteClassOnly,
    Divergence,
    Config,
    Io,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; the kind lets callers (and the CLI)
// branch without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::DimensionMismatch: return "dimension mismatch";
        case ErrorKind::Boundary: return "boundary error";
        case ErrorKind::NoUniformBound: return "no uniform bound";
        case ErrorKind::NotSamplable: return "behaviour not samplable";
        case ErrorKind::UndefinedEstimate: return "undefined estimate";
        case ErrorKind::NonIid: return "non-iid data";
        case ErrorKind::BiasUnavailable: return "bias bound unavailable";
        case ErrorKind::FiniteClassOnly: return "finite class only";
        case ErrorKind::Divergence: return "divergent chain";
        case ErrorKind::Config: return "config error";
        case ErrorKind::Io: return "io error";
    }
    return "error";
}

}  // namespace pacbandit
