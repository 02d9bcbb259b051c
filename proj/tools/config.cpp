#include "config.hpp"

#include "brake/loop_space.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace brake::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
    return true;
}

}  // namespace

Config Config::parse(std::istream& is, const std::string& origin) {
    Config c;
    c.origin_ = origin;
    std::string section, raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const std::string s = trim(raw.substr(0, raw.find('#')));
        if (s.empty()) continue;
        const std::string at = origin + ":" + std::to_string(line) + ": ";
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(at + "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (!valid_name(section)) throw ConfigError(at + "bad section name '" + section + "'");
            if (c.section_lines_.count(section)) throw ConfigError(at + "duplicate section [" + section + "]");
            c.section_lines_[section] = line;
            c.sections_[section];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(at + "expected key = value");
        if (section.empty()) throw ConfigError(at + "key outside of any [section]");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (!valid_name(key)) throw ConfigError(at + "bad key '" + key + "'");
        if (value.empty()) throw ConfigError(at + "empty value for '" + key + "'");
        if (c.sections_[section].count(key)) throw ConfigError(at + "duplicate key '" + key + "'");
        c.sections_[section][key] = {value, line};
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse(in, path);
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

std::string Config::where(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    return origin_ + ":" + (e ? std::to_string(e->line) : "?") + ": [" + section + "] " + key;
}

bool Config::has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

bool Config::has_section(const std::string& section) const { return sections_.count(section) > 0; }

std::string Config::text(const std::string& section, const std::string& key, const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
}

double Config::number(const std::string& section, const std::string& key, double fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    try {
        return parse_double(e->value);
    } catch (const Error&) {
        throw ConfigError(where(section, key) + ": not a number: '" + e->value + "'");
    }
}

int Config::integer(const std::string& section, const std::string& key, int fallback) const {
    const double v = number(section, key, fallback);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(where(section, key) + ": not an integer");
    return static_cast<int>(v);
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key,
                                    std::vector<double> fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    std::vector<double> out;
    std::istringstream is(e->value);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            out.push_back(parse_double(tok));
        } catch (const Error&) {
            throw ConfigError(where(section, key) + ": not a number: '" + tok + "'");
        }
    }
    return out;
}

double Config::positive(const std::string& section, const std::string& key, double fallback) const {
    const double v = number(section, key, fallback);
    if (!(v > 0.0)) throw ConfigError(where(section, key) + ": must be positive");
    return v;
}

void Config::require_keys(const std::string& section, const std::set<std::string>& allowed) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return;
    for (const auto& [key, entry] : s->second)
        if (!allowed.count(key)) throw ConfigError(where(section, key) + ": unknown key");
}

void Config::require_sections(const std::set<std::string>& sections) const {
    for (const auto& [name, line] : section_lines_)
        if (!sections.count(name))
            throw ConfigError(origin_ + ":" + std::to_string(line) + ": unknown section [" + name + "]");
}

ModelSpec Config::model() const {
    if (!has("model", "name")) throw ConfigError(origin_ + ": [model] name is required");
    ModelSpec spec;
    spec.name = text("model", "name", "");
    for (const auto& [key, entry] : sections_.at("model"))
        if (key != "name") spec.params[key] = entry.value;
    return spec;
}

std::string Config::canonical() const {
    std::ostringstream os;
    for (const auto& [name, keys] : sections_) {
        os << '[' << name << "]\n";
        for (const auto& [key, entry] : keys) os << key << " = " << entry.value << '\n';
    }
    return os.str();
}

}  // namespace brake::cli
