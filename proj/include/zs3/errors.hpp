#pragma once

#include <stdexcept>
#include <string>

namespace zs3 {

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error("dimension error: " + msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

struct LookupError : std::runtime_error {
    explicit LookupError(const std::string& msg) : std::runtime_error("lookup error: " + msg) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error("parse error: " + msg) {}
};

struct ValueError : std::runtime_error {
    explicit ValueError(const std::string& msg) : std::runtime_error("value error: " + msg) {}
};

struct IndexError : std::runtime_error {
    explicit IndexError(const std::string& msg) : std::runtime_error("index error: " + msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error("format error: " + msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error("i/o error: " + msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error("data error: " + msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error("numeric error: " + msg) {}
};

} // namespace zs3
