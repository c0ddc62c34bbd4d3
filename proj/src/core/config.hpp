#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace drcut {

// Nested key-value config text. One `key = value` pair per line, dots nest
// keys ("mu12.scale = 0"), `#` starts a comment, blank lines ignored. Values
// are scalars or comma-separated lists. Consumers declare the keys they
// accept; anything else is rejected so typos fail loudly.
class ConfigMap {
public:
    static ConfigMap parse_file(const std::string& path);
    static ConfigMap parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;

    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key) const;
    long get_long(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<std::string> get_strings(const std::string& key) const;

    // Throws ParseError naming every stored key that is not in `allowed`.
    void require_known_keys(const std::set<std::string>& allowed) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }
    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::string> entries_;
    std::string origin_;

    const std::string& raw(const std::string& key) const;
};

}  // namespace drcut
