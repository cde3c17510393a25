#pragma once

// Minimal INI-style config: [section] headers, key = value lines, '#' or ';'
// comments. Values keep their raw text; typed getters parse on demand.

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nomaosd::tool {

class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_stream(std::istream& is, const std::string& origin);

    bool has(const std::string& section, const std::string& key) const {
        return values_.count(section + "." + key) > 0;
    }
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const {
        const auto it = values_.find(section + "." + key);
        return it == values_.end() ? fallback : it->second;
    }
    std::string require(const std::string& section, const std::string& key) const {
        const auto it = values_.find(section + "." + key);
        if (it == values_.end())
            throw std::runtime_error("config: missing " + section + "." + key);
        return it->second;
    }
    double get_double(const std::string& s, const std::string& k, double fb) const {
        return has(s, k) ? std::stod(require(s, k)) : fb;
    }
    long get_int(const std::string& s, const std::string& k, long fb) const {
        return has(s, k) ? std::stol(require(s, k)) : fb;
    }
    std::vector<double> get_doubles(const std::string& s, const std::string& k) const {
        std::vector<double> out;
        if (!has(s, k)) return out;
        std::istringstream ss(require(s, k));
        double v;
        while (ss >> v) out.push_back(v);
        return out;
    }
    std::vector<std::string> get_words(const std::string& s, const std::string& k) const {
        std::vector<std::string> out;
        if (!has(s, k)) return out;
        std::istringstream ss(require(s, k));
        std::string w;
        while (ss >> w) out.push_back(w);
        return out;
    }
    void set(const std::string& section, const std::string& key, const std::string& v) {
        values_[section + "." + key] = v;
    }
    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace nomaosd::tool
