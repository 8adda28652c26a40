#pragma once

#include <stdexcept>
#include <string>

namespace breather {

enum class ErrorKind {
    InvalidMode,
    Overflow,
    NewtonDiverged,
    DomainExceeded,
    SpanError,
    NoContraction,
    MaxIters,
    NoCrossing,
    NoSignChange,
    DegenerateFit,
    EmptyOrbit,
    InvalidConfig,
    AuditViolation
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidMode: return "InvalidMode";
        case ErrorKind::Overflow: return "Overflow";
        case ErrorKind::NewtonDiverged: return "NewtonDiverged";
        case ErrorKind::DomainExceeded: return "DomainExceeded";
        case ErrorKind::SpanError: return "SpanError";
        case ErrorKind::NoContraction: return "NoContraction";
        case ErrorKind::MaxIters: return "MaxIters";
        case ErrorKind::NoCrossing: return "NoCrossing";
        case ErrorKind::NoSignChange: return "NoSignChange";
        case ErrorKind::DegenerateFit: return "DegenerateFit";
        case ErrorKind::EmptyOrbit: return "EmptyOrbit";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::AuditViolation: return "AuditViolation";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind k, const std::string& what)
        : std::runtime_error(std::string(to_string(k)) + ": " + what), kind_(k) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& what) { throw Error(k, what); }

}  // namespace breather
