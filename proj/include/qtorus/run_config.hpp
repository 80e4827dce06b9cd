#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qtorus/core_types.hpp"
#include "qtorus/diophantine.hpp"

namespace qtorus {

enum class ValueType { integer, real, boolean, string, real_list, int_list };

struct KeySpec {
    std::string name;
    ValueType type;
    std::string default_text;
    std::string doc;
    bool hashed = true;  // false for keys that cannot change any CSV (workers, paths)
};

// Every recognised key with its type, default and one-line description.
const std::vector<KeySpec>& config_keys();
const KeySpec* find_key(std::string_view name);

using ConfigValue = std::variant<std::int64_t, double, bool, std::string, std::vector<double>, std::vector<std::int64_t>>;

// Parses `text` as a value of `type`; throws ConfigError at (source, line, column).
ConfigValue parse_value(ValueType type, std::string_view text, const std::string& source, int line, int column);
std::string format_value(const ConfigValue& v);

// Flat key = value configuration.
//
//   # comment to end of line
//   include "relative/or/absolute.cfg"
//   key = value
//
// Values are typed per key: integers, reals, booleans (true/false), strings
// (bare or "quoted"), and comma-separated lists of reals or integers. Later
// assignments override earlier ones; includes are read in place.
class RunConfig {
public:
    RunConfig();

    static RunConfig from_file(const std::filesystem::path& path);
    static RunConfig from_string(std::string_view text, const std::string& source = "<string>",
                                 const std::filesystem::path& base_dir = {});

    // Applies one assignment, validating key and value.
    void set(std::string_view key, std::string_view value, const std::string& source = "<override>", int line = 1,
             int column = 1);
    bool is_set(std::string_view key) const;  // explicitly assigned (not only defaulted)

    std::int64_t get_int(std::string_view key) const;
    double get_real(std::string_view key) const;
    bool get_bool(std::string_view key) const;
    const std::string& get_string(std::string_view key) const;
    const std::vector<double>& get_reals(std::string_view key) const;
    const std::vector<std::int64_t>& get_ints(std::string_view key) const;

    // Canonical text: every key in table order, one per line.
    std::string serialize() const;
    // Hash of the canonical text over hashed keys (hex, 16 chars).
    std::string manifest_hash() const;

    const std::map<std::string, ConfigValue>& values() const { return values_; }

private:
    void parse_text(std::string_view text, const std::string& source, const std::filesystem::path& base_dir, int depth);
    const ConfigValue& at(std::string_view key) const;

    std::map<std::string, ConfigValue> values_;
    std::map<std::string, bool> explicit_;
};

// alpha syntax: comma-separated components, each an integer, a fraction p/q
// (exact), or a decimal (real); or algebraic:base; or critical:base,r1,r2.
PreciseVector parse_alpha(std::string_view text, int k);

// "gauss:s[:c]" or terms "c*r^p*exp(-pi*s*r)" written as "c:s:p" joined by ';'.
TestPsi parse_psi(std::string_view text);
std::string format_psi(const TestPsi& psi);

}  // namespace qtorus
