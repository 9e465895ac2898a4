#pragma once

#include <stdexcept>
#include <string>

namespace asfkit {

/// Base of every error thrown by the toolkit.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number.
class parse_error : public error {
public:
    parse_error(const std::string& what, std::size_t line)
        : error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class validation_error : public error {
public:
    using error::error;
};

/// Config file problem; `key()` names the offending entry.
class config_error : public error {
public:
    config_error(const std::string& key, const std::string& what)
        : error("config key '" + key + "': " + what), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class singular_system_error : public error {
public:
    using error::error;
};

/// Universal kriging drift row is collinear with the unit row.
class degenerate_drift_error : public singular_system_error {
public:
    using singular_system_error::singular_system_error;
};

} // namespace asfkit
