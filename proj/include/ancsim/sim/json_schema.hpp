#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ancsim/errors.hpp"

namespace ancsim {

struct SchemaIssue {
    std::string pointer;  // JSON pointer into the instance, "" for the root
    std::string message;
};

/// Validator for the JSON-schema keywords the scenario schema uses: type,
/// enum, required, properties, additionalProperties (boolean), items,
/// minItems, maxItems, minimum, exclusiveMinimum and local "#/..." $ref.
/// Other keywords are ignored.
class SchemaValidator {
public:
    explicit SchemaValidator(nlohmann::json schema) : root_(std::move(schema)) {
        if (!root_.is_object()) throw ConfigError("schema must be a JSON object");
    }

    std::vector<SchemaIssue> validate(const nlohmann::json& instance) const {
        std::vector<SchemaIssue> out;
        check(root_, instance, "", out, 0);
        return out;
    }

    static std::string escape(const std::string& key) {
        std::string s;
        for (char c : key) {
            if (c == '~') s += "~0";
            else if (c == '/') s += "~1";
            else s += c;
        }
        return s;
    }

private:
    static bool is_type(const nlohmann::json& v, const std::string& t) {
        if (t == "object") return v.is_object();
        if (t == "array") return v.is_array();
        if (t == "string") return v.is_string();
        if (t == "boolean") return v.is_boolean();
        if (t == "null") return v.is_null();
        if (t == "number") return v.is_number();
        if (t == "integer") {
            if (v.is_number_integer()) return true;
            if (v.is_number_float()) {
                const double d = v.get<double>();
                return std::isfinite(d) && d == static_cast<double>(static_cast<long long>(d));
            }
            return false;
        }
        return false;
    }

    const nlohmann::json& resolve(const std::string& ref) const {
        if (ref.rfind("#", 0) != 0) throw ConfigError("schema: only local $ref is supported: " + ref);
        try {
            return root_.at(nlohmann::json::json_pointer(ref.substr(1)));
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("schema: unresolved $ref " + ref);
        }
    }

    void check(const nlohmann::json& s, const nlohmann::json& v, const std::string& ptr,
               std::vector<SchemaIssue>& out, int depth) const {
        if (depth > 64) throw ConfigError("schema: $ref nesting too deep");
        if (auto it = s.find("$ref"); it != s.end()) {
            check(resolve(it->get<std::string>()), v, ptr, out, depth + 1);
            return;
        }
        if (auto it = s.find("type"); it != s.end()) {
            bool ok = false;
            std::string names;
            if (it->is_string()) {
                ok = is_type(v, it->get<std::string>());
                names = it->get<std::string>();
            } else {
                for (const auto& t : *it) {
                    ok = ok || is_type(v, t.get<std::string>());
                    names += (names.empty() ? "" : " or ") + t.get<std::string>();
                }
            }
            if (!ok) {
                out.push_back({ptr, "expected " + names + ", got " + v.type_name()});
                return;
            }
        }
        if (auto it = s.find("enum"); it != s.end()) {
            bool found = false;
            for (const auto& e : *it) found = found || e == v;
            if (!found) out.push_back({ptr, "value " + v.dump() + " not in " + it->dump()});
        }
        if (v.is_number()) {
            const double x = v.get<double>();
            if (auto it = s.find("minimum"); it != s.end() && x < it->get<double>()) {
                out.push_back({ptr, "must be >= " + it->dump()});
            }
            if (auto it = s.find("exclusiveMinimum"); it != s.end() && !(x > it->get<double>())) {
                out.push_back({ptr, "must be > " + it->dump()});
            }
        }
        if (v.is_array()) {
            if (auto it = s.find("minItems"); it != s.end() && v.size() < it->get<std::size_t>()) {
                out.push_back({ptr, "needs at least " + it->dump() + " items"});
            }
            if (auto it = s.find("maxItems"); it != s.end() && v.size() > it->get<std::size_t>()) {
                out.push_back({ptr, "allows at most " + it->dump() + " items"});
            }
            if (auto it = s.find("items"); it != s.end()) {
                for (std::size_t i = 0; i < v.size(); ++i) {
                    check(*it, v[i], ptr + "/" + std::to_string(i), out, depth + 1);
                }
            }
        }
        if (v.is_object()) {
            if (auto it = s.find("required"); it != s.end()) {
                for (const auto& k : *it) {
                    if (!v.contains(k.get<std::string>())) {
                        out.push_back({ptr + "/" + escape(k.get<std::string>()), "required property missing"});
                    }
                }
            }
            const auto props = s.find("properties");
            const bool closed = s.contains("additionalProperties") && s.at("additionalProperties") == false;
            for (const auto& [k, sub] : v.items()) {
                const std::string p = ptr + "/" + escape(k);
                if (props != s.end() && props->contains(k)) {
                    check(props->at(k), sub, p, out, depth + 1);
                } else if (closed) {
                    out.push_back({p, "unknown property"});
                }
            }
        }
    }

    nlohmann::json root_;
};

} // namespace ancsim
