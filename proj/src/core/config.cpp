#include "core/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace drcut {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

}  // namespace

ConfigMap ConfigMap::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

ConfigMap ConfigMap::parse_string(const std::string& text, const std::string& origin) {
    ConfigMap cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.entries_.count(key))
            throw ParseError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        cfg.entries_[key] = value;
    }
    return cfg;
}

bool ConfigMap::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string& ConfigMap::raw(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
        throw ParseError(origin_ + ": missing required config key '" + key + "'");
    return it->second;
}

double ConfigMap::get_double(const std::string& key) const { return parse_double(key, raw(key)); }

double ConfigMap::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long ConfigMap::get_long(const std::string& key) const {
    double v = get_double(key);
    long r = static_cast<long>(v);
    if (static_cast<double>(r) != v)
        throw ParseError("config key '" + key + "': expected an integer, got '" + raw(key) + "'");
    return r;
}

long ConfigMap::get_long(const std::string& key, long fallback) const {
    return has(key) ? get_long(key) : fallback;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = raw(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::string ConfigMap::get_string(const std::string& key) const { return raw(key); }

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
}

std::vector<std::string> ConfigMap::get_strings(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream in(raw(key));
    std::string item;
    while (std::getline(in, item, ',')) {
        std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    if (out.empty()) throw ParseError("config key '" + key + "': empty list");
    return out;
}

std::vector<double> ConfigMap::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : get_strings(key)) out.push_back(parse_double(key, s));
    return out;
}

void ConfigMap::require_known_keys(const std::set<std::string>& allowed) const {
    std::string bad;
    for (const auto& [key, value] : entries_) {
        (void)value;
        if (!allowed.count(key)) bad += (bad.empty() ? "" : ", ") + key;
    }
    if (!bad.empty())
        throw ParseError(origin_ + ": unknown config key(s): " + bad);
}

}  // namespace drcut
