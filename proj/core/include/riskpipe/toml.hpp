#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace riskpipe::toml {

// TOML subset: [table] and [[array-of-tables]] headers with dotted paths,
// `key = value` pairs with string/integer/float/boolean/array scalars,
// single-line values, and # comments. No dotted keys, inline tables,
// multi-line strings, or dates.
struct Value {
    enum class Kind { String, Integer, Float, Boolean, Array };

    Kind kind = Kind::String;
    std::string str;
    std::int64_t integer = 0;
    double real = 0.0;
    bool boolean = false;
    std::vector<Value> array;

    const std::string& as_string() const;
    std::int64_t as_integer() const;
    double as_number() const;  // Integer or Float
    bool as_boolean() const;
    const std::vector<Value>& as_array() const;
};

struct Table {
    std::map<std::string, Value> values;
    std::map<std::string, Table> tables;
    std::map<std::string, std::vector<Table>> table_arrays;

    bool has_value(const std::string& key) const { return values.count(key) != 0; }
    bool has_table(const std::string& key) const { return tables.count(key) != 0; }
    bool has_table_array(const std::string& key) const { return table_arrays.count(key) != 0; }

    const Value& value(const std::string& key) const;
    const Table& table(const std::string& key) const;
    const std::vector<Table>& table_array(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string_or(const std::string& key, const std::string& fallback) const;
    std::int64_t get_integer(const std::string& key) const;
    std::int64_t get_integer_or(const std::string& key, std::int64_t fallback) const;
    double get_number(const std::string& key) const;
    double get_number_or(const std::string& key, double fallback) const;
    bool get_boolean_or(const std::string& key, bool fallback) const;
    std::vector<std::string> get_string_array_or(const std::string& key) const;
};

// Throws ConfigError with a line number on any syntax violation.
Table parse(const std::string& text);
Table load_file(const std::string& path);

}  // namespace riskpipe::toml
