#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace hazmap {

/// Flat "key = value" file: one pair per line, '#' starts a comment, blank
/// lines allowed.  Every key must be consumed by the reader; leftovers are
/// reported as unknown.
class KeyValues {
public:
    KeyValues() = default;

    static KeyValues from_text(const std::string& text, const std::string& origin = "<config>") {
        KeyValues kv;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto nl = text.find('\n', pos);
            std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
            pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                            ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                            ": empty key");
            kv.values_[key] = value;
        }
        return kv;
    }

    static KeyValues load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("cannot open config " + path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return from_text(text, path);
    }

    /// Flag overrides replace file values; both count as consumed only when
    /// read.
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    bool contains(const std::string& key) const { return values_.count(key) != 0; }

    std::optional<std::string> get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto v = get(key);
        return v ? *v : fallback;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto v = get(key);
        if (!v) return fallback;
        try {
            std::size_t used = 0;
            const double out = std::stod(*v, &used);
            if (used != v->size()) throw std::invalid_argument("");
            return out;
        } catch (...) {
            throw std::invalid_argument("config key '" + key + "': bad number '" + *v + "'");
        }
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        const auto v = get(key);
        if (!v) return fallback;
        try {
            std::size_t used = 0;
            const long long out = std::stoll(*v, &used);
            if (used != v->size()) throw std::invalid_argument("");
            return out;
        } catch (...) {
            throw std::invalid_argument("config key '" + key + "': bad integer '" + *v + "'");
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto v = get(key);
        if (!v) return fallback;
        if (*v == "1" || *v == "true" || *v == "on") return true;
        if (*v == "0" || *v == "false" || *v == "off") return false;
        throw std::invalid_argument("config key '" + key + "': bad boolean '" + *v + "'");
    }

    /// Consumed keys with the given prefix, e.g. all palette entries.
    std::vector<std::pair<std::string, std::string>> take_prefixed(const std::string& prefix) const {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& [k, v] : values_)
            if (k.rfind(prefix, 0) == 0) {
                used_.insert(k);
                out.emplace_back(k, v);
            }
        return out;
    }

    /// Throws listing any key that was never read.
    void reject_unknown() const {
        std::string unknown;
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
        if (!unknown.empty())
            throw std::invalid_argument("unknown config key(s): " + unknown);
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

}  // namespace hazmap
