#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace klift {

enum class ErrorKind {
    Config,
    Size,
    Numerical,
    Branch,
    Conditioning,
    Convergence,
    Divergence,
    Unsupported,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct SizeError : Error {
    explicit SizeError(const std::string& w) : Error(ErrorKind::Size, w) {}
};
struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(ErrorKind::Numerical, w) {}
};
struct ConditioningError : Error {
    ConditioningError(const std::string& w, long rank_ = -1, long full_ = -1)
        : Error(ErrorKind::Conditioning, w), rank(rank_), full(full_) {}
    long rank;
    long full;
};
struct UnsupportedError : Error {
    explicit UnsupportedError(const std::string& w) : Error(ErrorKind::Unsupported, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};

// Thrown when an input eigenvalue sits on the closed negative real axis.
struct BranchError : Error {
    BranchError(const std::string& w, std::vector<std::complex<double>> offending_)
        : Error(ErrorKind::Branch, w), offending(std::move(offending_)) {}
    std::vector<std::complex<double>> offending;
};

struct ConvergenceError : Error {
    ConvergenceError(const std::string& w, std::vector<double> history)
        : Error(ErrorKind::Convergence, w), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

struct DivergenceError : Error {
    DivergenceError(const std::string& w, double t) : Error(ErrorKind::Divergence, w), time(t) {}
    double time;
};

// Process exit code for the command-line front end.
inline int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Io: return 4;
    default: return 3;
    }
}

}  // namespace klift
