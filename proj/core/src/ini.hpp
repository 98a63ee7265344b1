#pragma once

#include "crowdtrack/error.hpp"

#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <charconv>
#include <functional>
#include <map>
#include <string>

namespace crowdtrack::ini {

using Tree = boost::property_tree::ptree;

/// Parses an INI document, mapping parser errors to ConfigInvalid.
[[nodiscard]] Tree read(std::istream& in, const std::string& origin);

/// Typed key binder for one section: every key of the section must be bound,
/// so typos surface as ConfigInvalid instead of silently falling back to defaults.
class Section {
public:
    Section(std::string name) : name_(std::move(name)) {}

    Section& bind(const std::string& key, double& target) {
        setters_[key] = [this, key, &target](const std::string& v) { target = to_double(key, v); };
        return *this;
    }
    Section& bind(const std::string& key, int& target) {
        setters_[key] = [this, key, &target](const std::string& v) { target = static_cast<int>(to_long(key, v)); };
        return *this;
    }
    Section& bind(const std::string& key, long& target) {
        setters_[key] = [this, key, &target](const std::string& v) { target = to_long(key, v); };
        return *this;
    }
    Section& bind(const std::string& key, std::size_t& target) {
        setters_[key] = [this, key, &target](const std::string& v) {
            const long n = to_long(key, v);
            if (n < 0) {
                throw Error(ErrorKind::ConfigInvalid, fmt::format("[{}] {} must be nonnegative", name_, key));
            }
            target = static_cast<std::size_t>(n);
        };
        return *this;
    }
    Section& bind(const std::string& key, std::string& target) {
        setters_[key] = [&target](const std::string& v) { target = v; };
        return *this;
    }

    void apply(const Tree& section) const {
        for (const auto& [key, value] : section) {
            const auto it = setters_.find(key);
            if (it == setters_.end()) {
                throw Error(ErrorKind::ConfigInvalid, fmt::format("unknown key '{}' in section [{}]", key, name_));
            }
            it->second(value.data());
        }
    }

private:
    [[nodiscard]] double to_double(const std::string& key, const std::string& v) const {
        double out = 0.0;
        const auto* end = v.data() + v.size();
        const auto [ptr, ec] = std::from_chars(v.data(), end, out);
        if (ec != std::errc{} || ptr != end) {
            throw Error(ErrorKind::ConfigInvalid, fmt::format("[{}] {} = '{}' is not a number", name_, key, v));
        }
        return out;
    }
    [[nodiscard]] long to_long(const std::string& key, const std::string& v) const {
        long out = 0;
        const auto* end = v.data() + v.size();
        const auto [ptr, ec] = std::from_chars(v.data(), end, out);
        if (ec != std::errc{} || ptr != end) {
            throw Error(ErrorKind::ConfigInvalid, fmt::format("[{}] {} = '{}' is not an integer", name_, key, v));
        }
        return out;
    }

    std::string name_;
    std::map<std::string, std::function<void(const std::string&)>> setters_;
};

}  // namespace crowdtrack::ini
