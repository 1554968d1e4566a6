#pragma once

#include <stdexcept>
#include <string>

namespace nudgeda {

// All recoverable failures in the library raise Error with a short
// machine-greppable tag at the front of the message, e.g.
// "invalid-range: ..." or "nonfinite-state: ...".
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw Error(msg);
}

}  // namespace nudgeda
