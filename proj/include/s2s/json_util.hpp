#pragma once

#include "s2s/errors.hpp"

#include <json.hpp>

#include <initializer_list>
#include <limits>
#include <string>
#include <string_view>
#include <type_traits>

namespace s2s::json_util {

using nlohmann::json;

/// Throws ConfigError unless `j` is an object whose keys all appear in `allowed`.
inline void require_keys_subset(const json& j, std::initializer_list<std::string_view> allowed,
                                std::string_view where) {
    if (!j.is_object()) {
        throw ConfigError(std::string(where) + ": expected a JSON object");
    }
    for (const auto& item : j.items()) {
        bool known = false;
        for (auto a : allowed) {
            known = known || item.key() == a;
        }
        if (!known) {
            throw ConfigError(std::string(where) + ": unknown key '" + item.key() + "'");
        }
    }
}

/// Type-checked conversion; wrong types and out-of-range integers raise ConfigError.
template <typename T>
T as(const json& v, std::string_view where) {
    const auto fail = [&](const char* expected) {
        return ConfigError(std::string(where) + ": expected " + expected + ", got " + v.dump());
    };
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) {
            throw fail("boolean");
        }
        return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) {
            throw fail("integer");
        }
        if (v.is_number_unsigned()) {
            const auto u = v.get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
                throw fail("integer in range");
            }
            return static_cast<T>(u);
        }
        const auto s = v.get<std::int64_t>();
        if (s < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
            (s > 0 && static_cast<std::uint64_t>(s) > static_cast<std::uint64_t>(std::numeric_limits<T>::max()))) {
            throw fail("integer in range");
        }
        return static_cast<T>(s);
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) {
            throw fail("number");
        }
        return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) {
            throw fail("string");
        }
        return v.get<std::string>();
    } else {
        static_assert(sizeof(T) == 0, "unsupported type");
    }
}

/// Overwrites `out` when `key` is present.
template <typename T>
void read_optional(const json& j, const char* key, T& out, std::string_view where) {
    if (const auto it = j.find(key); it != j.end()) {
        out = as<T>(*it, std::string(where) + "." + key);
    }
}

} // namespace s2s::json_util
