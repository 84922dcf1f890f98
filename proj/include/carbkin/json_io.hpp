#pragma once

// Small helpers around nlohmann::json shared by the model, database and
// batch-config readers: comment-tolerant parsing, duplicate-key rejection
// and typed field access with path context in error messages.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace carbkin::json_io {

using Json = nlohmann::json;

inline std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError(path.string() + ": cannot open file");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

/// Parses JSON text allowing // and /* */ comments. Duplicate object keys are
/// an error; nlohmann would otherwise keep the last one silently.
inline Json parse_text(const std::string& text, const std::string& source)
{
    struct Frame {
        std::string name;
        std::set<std::string> keys;
    };
    std::vector<Frame> stack;
    std::string pending_key;

    auto path_of = [&stack]() {
        std::string path;
        for (std::size_t i = 1; i < stack.size(); ++i) {
            path += "/" + stack[i].name;
        }
        return path.empty() ? std::string("/") : path;
    };

    Json::parser_callback_t callback = [&](int /*depth*/, Json::parse_event_t event, Json& parsed) {
        switch (event) {
        case Json::parse_event_t::object_start:
        case Json::parse_event_t::array_start:
            stack.push_back({pending_key, {}});
            pending_key.clear();
            break;
        case Json::parse_event_t::object_end:
        case Json::parse_event_t::array_end:
            if (!stack.empty()) {
                stack.pop_back();
            }
            break;
        case Json::parse_event_t::key: {
            const auto key = parsed.get<std::string>();
            if (!stack.empty() && !stack.back().keys.insert(key).second) {
                throw ParseError(source + ": duplicate key '" + key + "' in " + path_of());
            }
            pending_key = key;
            break;
        }
        case Json::parse_event_t::value:
            break;
        }
        return true;
    };

    try {
        return Json::parse(text, callback, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    }
    catch (const Json::parse_error& e) {
        throw ParseError(source + ": " + e.what());
    }
}

inline Json parse_file(const std::filesystem::path& path)
{
    return parse_text(read_text_file(path), path.string());
}

/// Typed access to an object member; `where` names the enclosing object for
/// error messages.
class ObjectReader {
public:
    ObjectReader(const Json& object, std::string where)
        : object_(object)
        , where_(std::move(where))
    {
        if (!object_.is_object()) {
            throw ParseError(where_ + ": expected an object");
        }
    }

    const std::string& where() const noexcept { return where_; }

    bool has(const std::string& key) const { return object_.contains(key); }

    const Json& raw(const std::string& key) const
    {
        if (!object_.contains(key)) {
            throw ParseError(where_ + ": missing required field '" + key + "'");
        }
        return object_.at(key);
    }

    double number(const std::string& key) const
    {
        const Json& value = raw(key);
        if (!value.is_number()) {
            throw ParseError(where_ + "." + key + ": expected a number");
        }
        const double x = value.get<double>();
        if (!std::isfinite(x)) {
            throw ParseError(where_ + "." + key + ": value is not finite");
        }
        return x;
    }

    double number_or(const std::string& key, double fallback) const
    {
        return has(key) ? number(key) : fallback;
    }

    std::optional<double> optional_number(const std::string& key) const
    {
        if (!has(key)) {
            return std::nullopt;
        }
        return number(key);
    }

    std::string string(const std::string& key) const
    {
        const Json& value = raw(key);
        if (!value.is_string()) {
            throw ParseError(where_ + "." + key + ": expected a string");
        }
        return value.get<std::string>();
    }

    std::string string_or(const std::string& key, const std::string& fallback) const
    {
        return has(key) ? string(key) : fallback;
    }

    /// Rejects members not listed in `allowed` so misspelled keys are caught.
    void expect_only(std::initializer_list<const char*> allowed) const
    {
        for (const auto& item : object_.items()) {
            bool known = false;
            for (const char* name : allowed) {
                if (item.key() == name) {
                    known = true;
                    break;
                }
            }
            if (!known) {
                throw ParseError(where_ + ": unknown field '" + item.key() + "'");
            }
        }
    }

private:
    const Json& object_;
    std::string where_;
};

} // namespace carbkin::json_io
