#pragma once

#include <stdexcept>
#include <string>

namespace dropfilter {

// Shape or dimension disagreement between tensors/parameters.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Out-of-range scalar parameter (probabilities, counts, rates).
struct ValueError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed input file (IDX container, CSV).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dropfilter
