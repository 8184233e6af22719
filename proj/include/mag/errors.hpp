#pragma once

#include <stdexcept>
#include <string>

namespace mag {

// Error categories map onto the CLI exit-code contract.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;  // exit code 2
};
struct budget_error : std::runtime_error {
    using std::runtime_error::runtime_error;  // exit code 3
};
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;  // exit code 4
};
struct chart_error : numerical_error {
    using numerical_error::numerical_error;   // query outside a coordinate chart
};

}  // namespace mag
