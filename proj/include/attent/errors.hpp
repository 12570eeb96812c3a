#pragma once

#include <stdexcept>
#include <string>

namespace attent {

/// Violated precondition or shape contract on a public operation.
struct contract_error : std::runtime_error {
    explicit contract_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem or parse failure.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw contract_error(msg);
}

}  // namespace attent
