#pragma once

#include <stdexcept>
#include <string>

namespace traplab {

struct invalid_parameter_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Evaluation point outside the solver slab (z <= 0, or z >= ground plane).
struct out_of_domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

struct geometry_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct insufficient_data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct no_solution_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace traplab
