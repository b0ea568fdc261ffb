#pragma once

#include <stdexcept>
#include <string>

namespace freesing {

enum class Code {
    InvalidArgument = 1,
    Config,
    NonConvergent,
    Divergent,
    OnSupport,
    WrongKind,
    OutOfRange,
    BracketFailure,
    Unclassified,
    SideUndefined,
    InsufficientSamples,
    NonPositive,
    Instability,
    TruncationTooTight,
    NewtonDiverged,
    EigenFailure,
    EmptyRange,
    Internal,
};

const char* code_name(Code c);

class Error : public std::runtime_error {
public:
    Error(Code c, const std::string& msg) : std::runtime_error(msg), code_(c) {}
    Code code() const noexcept { return code_; }

private:
    Code code_;
};

[[noreturn]] void fail(Code c, const std::string& msg);

} // namespace freesing
