#pragma once

#include <stdexcept>
#include <string>

namespace pvmax {

/// A numerical failure tagged with the experiment or audit that raised it.
struct NumericError : std::runtime_error {
    std::string audit_id;
    NumericError(std::string id, const std::string& what) : std::runtime_error(what), audit_id(std::move(id)) {}
};

}  // namespace pvmax
