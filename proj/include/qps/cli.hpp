#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qps/suites.hpp"

namespace qps {

inline const char* kVersion = "qps 0.1.0";

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flat key = value configuration. '#' starts a comment; blank lines are ignored.
// Keys are validated against a fixed schema with defaults; unknown keys and malformed
// values raise ConfigError.
class Config {
public:
    Config();  // all defaults
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    void set(const std::string& key, const std::string& value);  // validated
    const std::string& raw(const std::string& key) const;
    double num(const std::string& key) const;
    long integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::vector<double> list(const std::string& key) const;
    double omega() const;  // "golden" or a number

    // Resolved configuration in schema order.
    Json to_json() const;
    std::string to_text() const;

    static const std::vector<std::pair<std::string, std::string>>& schema();

private:
    std::map<std::string, std::string> values_;
};

// Entry point shared by the qps executable. Returns the process exit code:
// 0 pass, 1 validated-property failure, 2 usage or configuration error.
int run_cli(int argc, char** argv);

}  // namespace qps
