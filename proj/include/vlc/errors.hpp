#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vlc {

// Base class for every error raised by the toolkit. Subclasses carry the
// failure kind in the type so callers can catch precisely.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace vlc
