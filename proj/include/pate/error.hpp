#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pate {

enum class ErrorKind {
    InvalidInput,
    Separation,
    RankDeficient,
    Infeasible,
    EmptyFitSubset,
    ColumnMismatch,
    DegenerateArm,
    PoolTooSmall,
    NotConverged,
};

std::string_view to_string(ErrorKind kind);

// Input-validation failures map to CLI exit code 2, everything else is a
// numerical failure (exit code 3).
inline bool is_validation_error(ErrorKind kind) {
    return kind == ErrorKind::InvalidInput || kind == ErrorKind::ColumnMismatch ||
           kind == ErrorKind::EmptyFitSubset || kind == ErrorKind::DegenerateArm ||
           kind == ErrorKind::PoolTooSmall;
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string op, const std::string& detail)
        : std::runtime_error(std::string(to_string(kind)) + " in " + op + ": " + detail),
          kind_(kind), op_(std::move(op)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& op() const noexcept { return op_; }

private:
    ErrorKind kind_;
    std::string op_;
};

}  // namespace pate
