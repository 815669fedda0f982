#pragma once

#include "wassflow/core.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

namespace wassflow {

// Flat key=value config with bracketed sections and '#' comments. Unknown
// sections/keys are rejected against the schema below at parse time.
class Config {
public:
    static const std::map<std::string, std::set<std::string>>& schema() {
        static const std::map<std::string, std::set<std::string>> s = {
            {"grid", {"nx", "ny", "x0", "y0", "lx", "ly"}},
            {"objective", {"id", "cx", "cy", "value"}},
            {"field", {"preset", "vx", "vy", "rate", "cx", "cy", "s", "amp", "x0", "y0", "eps"}},
            {"flow", {"safety", "max_steps", "stop_tol", "rho_max", "beta", "m_total", "seed",
                      "snapshot_every", "T", "dt_max"}},
            {"elasticity", {"mu", "lambda", "delta", "b_min", "p", "m_total",
                            "dirichlet", "traction", "gx", "gy"}},
            {"output", {"dir", "quiet"}},
        };
        return s;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_string(ss.str(), path);
    }

    static Config parse_string(const std::string& text, const std::string& origin = "<string>") {
        Config cfg;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
                section = trim(line.substr(1, line.size() - 2));
                if (!schema().count(section))
                    throw ConfigError(origin + ": unknown section [" + section + "]");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (section.empty())
                throw ConfigError(origin + ": key `" + key + "` outside any section");
            if (!schema().at(section).count(key))
                throw ConfigError(origin + ": unknown key [" + section + "]." + key);
            cfg.values_[section + "." + key] = value;
        }
        return cfg;
    }

    bool has(const std::string& section, const std::string& key) const {
        return values_.count(section + "." + key) != 0;
    }

    std::string get_string(const std::string& section, const std::string& key) const {
        const auto it = values_.find(section + "." + key);
        if (it == values_.end())
            throw ConfigError("missing [" + section + "]." + key);
        return it->second;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        return has(section, key) ? get_string(section, key) : fallback;
    }

    double get_double(const std::string& section, const std::string& key) const {
        const std::string s = get_string(section, key);
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("bad numeric value for [" + section + "]." + key + ": `" + s + "`");
        }
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        return has(section, key) ? get_double(section, key) : fallback;
    }

    long get_int(const std::string& section, const std::string& key) const {
        const std::string s = get_string(section, key);
        try {
            std::size_t pos = 0;
            const long v = std::stol(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("bad integer value for [" + section + "]." + key + ": `" + s + "`");
        }
    }

    long get_int(const std::string& section, const std::string& key, long fallback) const {
        return has(section, key) ? get_int(section, key) : fallback;
    }

private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    std::map<std::string, std::string> values_;
};

} // namespace wassflow
