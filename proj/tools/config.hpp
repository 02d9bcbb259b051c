#pragma once

// Flat key = value configuration with [section] headers; '#' starts a comment.

#include "brake/hamiltonian.hpp"

#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace brake::cli {

/// Parse or validation failure; the message carries origin:line where known.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Config {
public:
    static Config parse(std::istream& is, const std::string& origin = "<config>");
    static Config load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const;
    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const;
    double number(const std::string& section, const std::string& key, double fallback) const;
    int integer(const std::string& section, const std::string& key, int fallback) const;
    std::vector<double> numbers(const std::string& section, const std::string& key,
                                std::vector<double> fallback) const;
    /// Strictly positive number.
    double positive(const std::string& section, const std::string& key, double fallback) const;

    /// Rejects keys of `section` outside `allowed`, and sections outside `sections`.
    void require_keys(const std::string& section, const std::set<std::string>& allowed) const;
    void require_sections(const std::set<std::string>& sections) const;

    /// [model]: name plus every other key as a parameter.
    ModelSpec model() const;
    /// Canonical text: sections and keys in sorted order.
    std::string canonical() const;

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::string where(const std::string& section, const std::string& key) const;
    const Entry* find(const std::string& section, const std::string& key) const;

    std::string origin_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::map<std::string, int> section_lines_;
};

}  // namespace brake::cli
