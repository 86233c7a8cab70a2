#pragma once

#include <stdexcept>
#include <string>

namespace fracfield {

// Invalid user-facing input (bad parameter, bad grid, point outside domain).
// The CLI maps this to exit code 2.
class invalid_input : public std::invalid_argument {
public:
    explicit invalid_input(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical procedure failed to meet its contract (quadrature nonconvergence,
// factorization failure, root bracketing failure). The CLI maps this to exit code 3.
class numeric_failure : public std::runtime_error {
public:
    explicit numeric_failure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fracfield
