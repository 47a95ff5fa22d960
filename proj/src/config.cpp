#include "galilab/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace galilab {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str(), path);
}

RunConfig RunConfig::from_string(const std::string& text, const std::string& name) {
    RunConfig cfg;
    cfg.name_ = name;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                         ": malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                         ": empty section name");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                     ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(name + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.data_[section].count(key))
            throw std::runtime_error(name + ":" + std::to_string(lineno) + ": duplicate key '" +
                                     key + "' in section [" + section + "]");
        cfg.data_[section][key] = Entry{value, lineno, false};
    }
    return cfg;
}

const RunConfig::Entry* RunConfig::find(const std::string& section, const std::string& key) const {
    auto sit = data_.find(section);
    if (sit == data_.end()) return nullptr;
    auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return nullptr;
    kit->second.consumed = true;
    return &kit->second;
}

const RunConfig::Entry& RunConfig::require(const std::string& section,
                                           const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e)
        throw std::runtime_error(name_ + ": missing required key '" + key + "' in section [" +
                                 section + "]");
    return *e;
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
    auto sit = data_.find(section);
    return sit != data_.end() && sit->second.count(key) > 0;
}

double RunConfig::get_double(const std::string& section, const std::string& key) {
    const Entry& e = require(section, key);
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(name_ + ":" + std::to_string(e.line) + ": key '" + key +
                                 "' is not a number: '" + e.value + "'");
    }
}

double RunConfig::get_double(const std::string& section, const std::string& key, double fallback) {
    return has(section, key) ? get_double(section, key) : fallback;
}

long RunConfig::get_int(const std::string& section, const std::string& key) {
    const Entry& e = require(section, key);
    try {
        std::size_t pos = 0;
        const long v = std::stol(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(name_ + ":" + std::to_string(e.line) + ": key '" + key +
                                 "' is not an integer: '" + e.value + "'");
    }
}

long RunConfig::get_int(const std::string& section, const std::string& key, long fallback) {
    return has(section, key) ? get_int(section, key) : fallback;
}

bool RunConfig::get_bool(const std::string& section, const std::string& key, bool fallback) {
    if (!has(section, key)) return fallback;
    const Entry& e = require(section, key);
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw std::runtime_error(name_ + ":" + std::to_string(e.line) + ": key '" + key +
                             "' is not a boolean: '" + e.value + "'");
}

std::string RunConfig::get_string(const std::string& section, const std::string& key) {
    return require(section, key).value;
}

std::string RunConfig::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) {
    return has(section, key) ? get_string(section, key) : fallback;
}

std::vector<double> RunConfig::get_double_list(const std::string& section,
                                               const std::string& key) {
    const Entry& e = require(section, key);
    std::vector<double> out;
    std::istringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw std::runtime_error(name_ + ":" + std::to_string(e.line) + ": key '" + key +
                                     "' has a non-numeric list item: '" + item + "'");
        }
    }
    if (out.empty())
        throw std::runtime_error(name_ + ":" + std::to_string(e.line) + ": key '" + key +
                                 "' is an empty list");
    return out;
}

std::vector<double> RunConfig::get_double_list(const std::string& section, const std::string& key,
                                               const std::vector<double>& fallback) {
    return has(section, key) ? get_double_list(section, key) : fallback;
}

void RunConfig::assert_all_consumed() const {
    std::string leftovers;
    for (const auto& [section, keys] : data_)
        for (const auto& [key, entry] : keys)
            if (!entry.consumed)
                leftovers += "\n  line " + std::to_string(entry.line) + ": [" + section + "] " +
                             key + " = " + entry.value;
    if (!leftovers.empty())
        throw std::runtime_error(name_ + ": unknown keys (typo?):" + leftovers);
}

std::string RunConfig::resolved_echo() const {
    std::string out = "# resolved configuration (" + name_ + ")\n";
    for (const auto& [section, keys] : data_) {
        out += "[" + section + "]\n";
        for (const auto& [key, entry] : keys) out += key + " = " + entry.value + "\n";
    }
    return out;
}

}  // namespace galilab
