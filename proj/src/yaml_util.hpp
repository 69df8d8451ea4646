#pragma once

#include <yaml-cpp/yaml.h>

#include <string>
#include <utility>

#include "freqctl/errors.hpp"

namespace freqctl::detail {

inline std::string where(const std::string& origin, const YAML::Node& node) {
    const YAML::Mark m = node.Mark();
    if (m.line < 0) return origin;
    return origin + ":" + std::to_string(m.line + 1);
}

inline std::string where(const std::string& origin, const YAML::Mark& m) {
    if (m.line < 0) return origin;
    return origin + ":" + std::to_string(m.line + 1);
}

/// Parse helper that prefixes every diagnostic with "origin:line".
class Reader {
  public:
    explicit Reader(std::string origin) : origin_(std::move(origin)) {}

    const std::string& origin() const { return origin_; }

    [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
        throw ParseError(where(origin_, at) + ": " + what);
    }
    [[noreturn]] void invalid(const YAML::Node& at, const std::string& what) const {
        throw ValidationError(where(origin_, at) + ": " + what);
    }

    YAML::Node require(const YAML::Node& map, const char* key) const {
        if (!map.IsMap()) fail(map, "expected a mapping");
        YAML::Node v = map[key];
        if (!v) fail(map, std::string("missing field '") + key + "'");
        return v;
    }

    template <class T>
    T as(const YAML::Node& node, const char* what) const {
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, std::string("field '") + what + "' has the wrong type");
        }
    }

    template <class T>
    T get(const YAML::Node& map, const char* key) const {
        return as<T>(require(map, key), key);
    }

    template <class T>
    T get(const YAML::Node& map, const char* key, const T& fallback) const {
        if (!map.IsMap()) fail(map, "expected a mapping");
        YAML::Node v = map[key];
        if (!v || v.IsNull()) return fallback;
        return as<T>(v, key);
    }

  private:
    std::string origin_;
};

inline YAML::Node load_yaml(const std::string& text, const std::string& origin) {
    try {
        return YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(where(origin, e.mark) + ": " + e.msg);
    }
}

}  // namespace freqctl::detail
