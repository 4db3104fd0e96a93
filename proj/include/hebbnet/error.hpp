#ifndef HEBBNET_ERROR_HPP
#define HEBBNET_ERROR_HPP

#include <stdexcept>
#include <string>

namespace hebbnet {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape/size mismatch between operands; message names the offending sizes.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

/// Malformed or missing input files (dataset binaries, checkpoints).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

/// Training produced non-finite values.
class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& msg) : Error(msg) {}
};

} // namespace hebbnet

#endif
