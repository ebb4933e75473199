#pragma once

#include <stdexcept>
#include <string>

namespace iwsn {

// Malformed input data: bad files, dimension mismatches, unknown names.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Arithmetic breakdown such as a non-finite training loss.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace iwsn
