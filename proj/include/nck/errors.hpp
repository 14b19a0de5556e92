#pragma once

#include <stdexcept>
#include <string>

namespace nck {

struct invalid_input : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct invalid_config : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct unsupported_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct degenerate_contrast : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct training_diverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct construction_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct support_violation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace nck
