#pragma once

#include <stdexcept>
#include <string>

namespace preimage {

// Malformed inputs: bad shapes, violated invariants, unparseable files.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally valid request outside what the implementation can do
// (e.g. exact volume above the dimension cap).
struct CapabilityError : std::runtime_error {
    explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace preimage
