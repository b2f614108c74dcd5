#pragma once

#include <stdexcept>
#include <string>

namespace tornadocast {

// Missing files, unreadable inputs, bad row contents.
class FileError : public std::runtime_error {
public:
    explicit FileError(const std::string& msg) : std::runtime_error(msg) {}
};

// Header/shape mismatches: wrong feature count, incompatible schemas.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& msg, int epoch, std::size_t batch)
        : std::runtime_error(msg), epoch(epoch), batch(batch) {}
    int epoch;          // 1-based
    std::size_t batch;  // 1-based within the epoch
};

}  // namespace tornadocast
