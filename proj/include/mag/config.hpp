#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mag {

/// Line-oriented configuration: `[section]` headers, `key = value` entries,
/// `#` comments, UTF-8. Keys are addressed as "section.key"; entries before
/// any section header live in the "" section.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get_str(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& dflt) const;
    double get_num(const std::string& key) const;
    double get_num(const std::string& key, double dflt) const;
    std::vector<double> get_list(const std::string& key) const;  // comma separated

    const std::map<std::string, std::string>& entries() const { return kv_; }
    std::string canonical_text() const;  // sorted key=value lines, for hashing
    uint64_t hash() const;               // FNV-1a of the canonical text

private:
    std::map<std::string, std::string> kv_;
};

}  // namespace mag
