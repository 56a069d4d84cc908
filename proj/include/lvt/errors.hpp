#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lvt {

/// File or stream failure. `byte_offset` points at the first offending byte.
class IoError : public std::runtime_error {
public:
    IoError(const std::string& message, std::size_t byte_offset)
        : std::runtime_error(message + " (byte offset " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}

    std::size_t byte_offset() const { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

/// Numerical routine failed to converge or produced unusable output.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& message) : std::runtime_error(message) {}
};

}  // namespace lvt
