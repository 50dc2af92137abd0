#pragma once

#include <stdexcept>
#include <string>

namespace tbm {

enum class ErrorCode : int {
    Ok = 0,
    InvalidInput = 1,
    Domain = 2,
    Fit = 3,
    Io = 4,
    Parse = 5,
    Runtime = 6,
};

// Every failure raised by the core carries a code that the C layer maps 1:1
// onto tbm_status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace tbm
