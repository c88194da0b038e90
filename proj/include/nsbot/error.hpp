#pragma once

#include <stdexcept>
#include <string>

namespace nsbot {

// Base for every error the engine reports. Module headers derive the
// specific kinds callers are expected to catch.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace nsbot
