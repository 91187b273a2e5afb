#pragma once

#include <stdexcept>
#include <string>

namespace gm {

// Failure classes double as CLI exit codes.
enum class ErrClass {
    fail = 1,
    parse = 2,
    budget = 3,
    precondition = 4,
    unsupported = 5,
    construction = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrClass cls, const std::string& msg) : std::runtime_error(msg), cls_(cls) {}
    ErrClass cls() const { return cls_; }

private:
    ErrClass cls_;
};

inline const char* err_class_name(ErrClass c) {
    switch (c) {
        case ErrClass::fail: return "FAIL";
        case ErrClass::parse: return "PARSE";
        case ErrClass::budget: return "BUDGET";
        case ErrClass::precondition: return "PRECONDITION";
        case ErrClass::unsupported: return "UNSUPPORTED";
        case ErrClass::construction: return "CONSTRUCTION";
    }
    return "FAIL";
}

}  // namespace gm
