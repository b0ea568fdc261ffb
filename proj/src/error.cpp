#include "error.hpp"

namespace freesing {

const char* code_name(Code c) {
    switch (c) {
    case Code::InvalidArgument: return "InvalidArgument";
    case Code::Config: return "ConfigError";
    case Code::NonConvergent: return "NonConvergent";
    case Code::Divergent: return "Divergent";
    case Code::OnSupport: return "OnSupport";
    case Code::WrongKind: return "WrongKind";
    case Code::OutOfRange: return "OutOfRange";
    case Code::BracketFailure: return "BracketFailure";
    case Code::Unclassified: return "Unclassified";
    case Code::SideUndefined: return "SideUndefined";
    case Code::InsufficientSamples: return "InsufficientSamples";
    case Code::NonPositive: return "NonPositive";
    case Code::Instability: return "Instability";
    case Code::TruncationTooTight: return "TruncationTooTight";
    case Code::NewtonDiverged: return "NewtonDiverged";
    case Code::EigenFailure: return "EigenFailure";
    case Code::EmptyRange: return "EmptyRange";
    case Code::Internal: return "Internal";
    }
    return "Unknown";
}

void fail(Code c, const std::string& msg) { throw Error(c, msg); }

} // namespace freesing
