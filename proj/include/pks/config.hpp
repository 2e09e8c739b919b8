#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pks/error.hpp"
#include "pks/math.hpp"

namespace pks {

/// Flat key = value text with [section] headers. '#' starts a comment.
/// Keys are addressed as "section.key"; keys before any header live in "".
class Config {
public:
    static Config parse(std::istream& in, const std::string& origin = "<config>") {
        Config c;
        c.origin_ = origin;
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']' || line.size() < 3)
                    throw Error(ErrorCode::ConfigError, origin + ":" + std::to_string(lineno) + ": malformed section header '" + line + "'");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw Error(ErrorCode::ConfigError, origin + ":" + std::to_string(lineno) + ": expected key = value, got '" + line + "'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            const std::string full = section.empty() ? key : section + "." + key;
            if (key.empty())
                throw Error(ErrorCode::ConfigError, origin + ":" + std::to_string(lineno) + ": empty key");
            if (c.values_.count(full))
                throw Error(ErrorCode::ConfigError, origin + ":" + std::to_string(lineno) + ": duplicate key '" + full + "'");
            c.values_[full] = value;
            c.order_.push_back(full);
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file '" + path + "'");
        return parse(in, path);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::string& origin() const { return origin_; }

    std::string string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw Error(ErrorCode::ConfigError, origin_ + ": missing key '" + key + "'");
        used_[key] = true;
        return it->second;
    }
    std::string string(const std::string& key, const std::string& fallback) const { return has(key) ? string(key) : fallback; }

    double number(const std::string& key) const { return to_number(key, string(key)); }
    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    long integer(const std::string& key, long fallback) const {
        if (!has(key)) return fallback;
        const double v = number(key);
        if (v != std::floor(v)) throw Error(ErrorCode::ConfigError, origin_ + ": key '" + key + "' must be an integer");
        return static_cast<long>(v);
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto v = string(key);
        if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
        if (v == "off" || v == "false" || v == "no" || v == "0") return false;
        throw Error(ErrorCode::ConfigError, origin_ + ": key '" + key + "' must be on/off, got '" + v + "'");
    }

    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(string(key));
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(to_number(key, trim(item)));
        if (out.empty()) throw Error(ErrorCode::ConfigError, origin_ + ": key '" + key + "' is empty");
        return out;
    }
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
        return has(key) ? numbers(key) : fallback;
    }

    /// Keys of one section, in file order, without the section prefix.
    std::vector<std::string> section(const std::string& name) const {
        std::vector<std::string> keys;
        const std::string prefix = name + ".";
        for (const auto& k : order_)
            if (k.rfind(prefix, 0) == 0) keys.push_back(k.substr(prefix.size()));
        return keys;
    }

    /// Keys present in the file but never read; a typo guard.
    std::vector<std::string> unused() const {
        std::vector<std::string> out;
        for (const auto& k : order_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

    void set(const std::string& key, const std::string& value) {
        if (!values_.count(key)) order_.push_back(key);
        values_[key] = value;
    }

private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    /// Plain numbers, optionally with a trailing "pi" factor: "4pi", "0.5 pi", "pi".
    double to_number(const std::string& key, std::string text) const {
        double factor = 1.0;
        if (text.size() >= 2 && text.compare(text.size() - 2, 2, "pi") == 0) {
            factor = pi;
            text = trim(text.substr(0, text.size() - 2));
            if (text.empty()) text = "1";
        }
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(text, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != text.size() || text.empty() || !std::isfinite(v))
            throw Error(ErrorCode::ConfigError, origin_ + ": key '" + key + "' is not a number");
        return v * factor;
    }

    std::string origin_;
    std::map<std::string, std::string> values_;
    std::vector<std::string> order_;
    mutable std::map<std::string, bool> used_;
};

}  // namespace pks
