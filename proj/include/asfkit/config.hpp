#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "error.hpp"
#include "text.hpp"

namespace asfkit {

/// `key = value` text file; `#` starts a comment. Tracks which keys were
/// read so leftovers can be reported as unknown.
class key_value_file {
public:
    static key_value_file parse(const std::string& content)
    {
        key_value_file f;
        const auto rows = text::lines(content);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::string_view line = rows[i];
            if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = text::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw parse_error("expected 'key = value'", i + 1);
            const auto key = std::string(text::trim(line.substr(0, eq)));
            const auto value = std::string(text::trim(line.substr(eq + 1)));
            if (key.empty()) throw parse_error("empty key", i + 1);
            if (!f.values_.emplace(key, value).second) throw config_error(key, "duplicate key (line " + std::to_string(i + 1) + ")");
        }
        return f;
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key) const
    {
        const auto it = values_.find(key);
        if (it == values_.end()) throw config_error(key, "missing");
        used_.insert(key);
        return it->second;
    }

    double get_double(const std::string& key) const
    {
        const auto s = get_string(key);
        const auto v = text::parse_double(s);
        if (!v) throw config_error(key, "not a number: '" + s + "'");
        return *v;
    }

    double get_double(const std::string& key, double fallback) const { return has(key) ? get_double(key) : fallback; }

    long long get_int(const std::string& key) const
    {
        const auto s = get_string(key);
        const auto v = text::parse_int(s);
        if (!v) throw config_error(key, "not an integer: '" + s + "'");
        return *v;
    }

    std::vector<double> get_doubles(const std::string& key) const
    {
        std::vector<double> out;
        for (auto part : text::split(get_string(key), ',')) {
            const auto v = text::parse_double(part);
            if (!v) throw config_error(key, "not a number list");
            out.push_back(*v);
        }
        return out;
    }

    std::vector<std::string> get_strings(const std::string& key) const
    {
        std::vector<std::string> out;
        for (auto part : text::split(get_string(key), ','))
            if (!part.empty()) out.emplace_back(part);
        return out;
    }

    /// Throws on the first key that was never read.
    void reject_unused() const
    {
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) throw config_error(k, "unknown key");
    }

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

} // namespace asfkit
