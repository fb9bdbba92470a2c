#include "riskpipe/toml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "riskpipe/errors.hpp"

namespace riskpipe::toml {

namespace {

[[noreturn]] void fail(std::size_t line_no, const std::string& message) {
    throw ConfigError("line " + std::to_string(line_no) + ": " + message);
}

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin])) != 0) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1])) != 0) {
        --end;
    }
    return s.substr(begin, end - begin);
}

// Drops a trailing # comment, honouring double-quoted strings.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (in_string) {
            if (ch == '\\') {
                ++i;
            } else if (ch == '"') {
                in_string = false;
            }
        } else if (ch == '"') {
            in_string = true;
        } else if (ch == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

bool is_bare_key_char(char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) != 0 || ch == '_' || ch == '-';
}

std::vector<std::string> split_path(const std::string& path, std::size_t line_no) {
    std::vector<std::string> parts;
    std::string current;
    for (char ch : path) {
        if (ch == '.') {
            if (trim(current).empty()) {
                fail(line_no, "empty segment in table path '" + path + "'");
            }
            parts.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    if (trim(current).empty()) {
        fail(line_no, "empty segment in table path '" + path + "'");
    }
    parts.push_back(trim(current));
    for (const std::string& part : parts) {
        for (char ch : part) {
            if (!is_bare_key_char(ch)) {
                fail(line_no, "invalid character in table path '" + path + "'");
            }
        }
    }
    return parts;
}

struct ValueParser {
    const std::string& text;
    std::size_t pos = 0;
    std::size_t line_no;

    void skip_spaces() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) {
            ++pos;
        }
    }

    Value parse_value() {
        skip_spaces();
        if (pos >= text.size()) {
            fail(line_no, "missing value");
        }
        const char ch = text[pos];
        if (ch == '"') {
            return parse_string();
        }
        if (ch == '[') {
            return parse_array();
        }
        return parse_scalar_word();
    }

    Value parse_string() {
        ++pos;  // opening quote
        Value value;
        value.kind = Value::Kind::String;
        while (pos < text.size()) {
            const char ch = text[pos];
            if (ch == '"') {
                ++pos;
                return value;
            }
            if (ch == '\\') {
                ++pos;
                if (pos >= text.size()) {
                    break;
                }
                switch (text[pos]) {
                    case '"':
                        value.str.push_back('"');
                        break;
                    case '\\':
                        value.str.push_back('\\');
                        break;
                    case 'n':
                        value.str.push_back('\n');
                        break;
                    case 't':
                        value.str.push_back('\t');
                        break;
                    case 'r':
                        value.str.push_back('\r');
                        break;
                    default:
                        fail(line_no, std::string("unsupported escape \\") + text[pos]);
                }
                ++pos;
            } else {
                value.str.push_back(ch);
                ++pos;
            }
        }
        fail(line_no, "unterminated string");
    }

    Value parse_array() {
        ++pos;  // opening bracket
        Value value;
        value.kind = Value::Kind::Array;
        skip_spaces();
        if (pos < text.size() && text[pos] == ']') {
            ++pos;
            return value;
        }
        while (true) {
            value.array.push_back(parse_value());
            skip_spaces();
            if (pos >= text.size()) {
                fail(line_no, "unterminated array");
            }
            if (text[pos] == ',') {
                ++pos;
                skip_spaces();
                if (pos < text.size() && text[pos] == ']') {  // trailing comma
                    ++pos;
                    return value;
                }
                continue;
            }
            if (text[pos] == ']') {
                ++pos;
                return value;
            }
            fail(line_no, "expected ',' or ']' in array");
        }
    }

    Value parse_scalar_word() {
        const std::size_t begin = pos;
        while (pos < text.size() && text[pos] != ',' && text[pos] != ']' && text[pos] != ' ' &&
               text[pos] != '\t') {
            ++pos;
        }
        const std::string word = text.substr(begin, pos - begin);
        Value value;
        if (word == "true" || word == "false") {
            value.kind = Value::Kind::Boolean;
            value.boolean = word == "true";
            return value;
        }
        std::string digits;
        bool is_float = false;
        for (char ch : word) {
            if (ch == '_') {
                continue;
            }
            if (ch == '.' || ch == 'e' || ch == 'E') {
                is_float = true;
            }
            digits.push_back(ch);
        }
        try {
            std::size_t used = 0;
            if (is_float) {
                value.kind = Value::Kind::Float;
                value.real = std::stod(digits, &used);
            } else {
                value.kind = Value::Kind::Integer;
                value.integer = std::stoll(digits, &used);
            }
            if (used != digits.size()) {
                fail(line_no, "trailing characters in number '" + word + "'");
            }
        } catch (const std::invalid_argument&) {
            fail(line_no, "cannot parse value '" + word + "'");
        } catch (const std::out_of_range&) {
            fail(line_no, "number out of range '" + word + "'");
        }
        return value;
    }
};

}  // namespace

const Value& Table::value(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) {
        throw ConfigError("missing key '" + key + "'");
    }
    return it->second;
}

const Table& Table::table(const std::string& key) const {
    const auto it = tables.find(key);
    if (it == tables.end()) {
        throw ConfigError("missing table '" + key + "'");
    }
    return it->second;
}

const std::vector<Table>& Table::table_array(const std::string& key) const {
    const auto it = table_arrays.find(key);
    if (it == table_arrays.end()) {
        throw ConfigError("missing table array '" + key + "'");
    }
    return it->second;
}

const std::string& Value::as_string() const {
    if (kind != Kind::String) {
        throw ConfigError("value is not a string");
    }
    return str;
}

std::int64_t Value::as_integer() const {
    if (kind != Kind::Integer) {
        throw ConfigError("value is not an integer");
    }
    return integer;
}

double Value::as_number() const {
    if (kind == Kind::Integer) {
        return static_cast<double>(integer);
    }
    if (kind == Kind::Float) {
        return real;
    }
    throw ConfigError("value is not a number");
}

bool Value::as_boolean() const {
    if (kind != Kind::Boolean) {
        throw ConfigError("value is not a boolean");
    }
    return boolean;
}

const std::vector<Value>& Value::as_array() const {
    if (kind != Kind::Array) {
        throw ConfigError("value is not an array");
    }
    return array;
}

std::string Table::get_string(const std::string& key) const {
    try {
        return value(key).as_string();
    } catch (const ConfigError& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

std::string Table::get_string_or(const std::string& key, const std::string& fallback) const {
    return has_value(key) ? get_string(key) : fallback;
}

std::int64_t Table::get_integer(const std::string& key) const {
    try {
        return value(key).as_integer();
    } catch (const ConfigError& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

std::int64_t Table::get_integer_or(const std::string& key, std::int64_t fallback) const {
    return has_value(key) ? get_integer(key) : fallback;
}

double Table::get_number(const std::string& key) const {
    try {
        return value(key).as_number();
    } catch (const ConfigError& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

double Table::get_number_or(const std::string& key, double fallback) const {
    return has_value(key) ? get_number(key) : fallback;
}

bool Table::get_boolean_or(const std::string& key, bool fallback) const {
    if (!has_value(key)) {
        return fallback;
    }
    try {
        return value(key).as_boolean();
    } catch (const ConfigError& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

std::vector<std::string> Table::get_string_array_or(const std::string& key) const {
    std::vector<std::string> out;
    if (!has_value(key)) {
        return out;
    }
    try {
        for (const Value& entry : value(key).as_array()) {
            out.push_back(entry.as_string());
        }
    } catch (const ConfigError& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
    return out;
}

Table parse(const std::string& text) {
    Table root;
    Table* current = &root;

    std::istringstream in(text);
    std::string raw_line;
    std::size_t line_no = 0;
    while (std::getline(in, raw_line)) {
        ++line_no;
        if (!raw_line.empty() && raw_line.back() == '\r') {
            raw_line.pop_back();
        }
        const std::string line = trim(strip_comment(raw_line));
        if (line.empty()) {
            continue;
        }

        if (line.front() == '[') {
            const bool is_array = line.size() >= 2 && line[1] == '[';
            const std::string closer = is_array ? "]]" : "]";
            if (line.size() < 2 * closer.size() ||
                line.substr(line.size() - closer.size()) != closer) {
                fail(line_no, "malformed table header '" + line + "'");
            }
            const std::string path_text =
                line.substr(closer.size(), line.size() - 2 * closer.size());
            const std::vector<std::string> path = split_path(path_text, line_no);

            Table* cursor = &root;
            for (std::size_t i = 0; i + 1 < path.size(); ++i) {
                if (cursor->has_value(path[i])) {
                    fail(line_no, "'" + path[i] + "' is a value, not a table");
                }
                cursor = &cursor->tables[path[i]];
            }
            const std::string& leaf = path.back();
            if (cursor->has_value(leaf)) {
                fail(line_no, "'" + leaf + "' is a value, not a table");
            }
            if (is_array) {
                if (cursor->has_table(leaf)) {
                    fail(line_no, "'" + leaf + "' already defined as a plain table");
                }
                cursor->table_arrays[leaf].emplace_back();
                current = &cursor->table_arrays[leaf].back();
            } else {
                if (cursor->has_table_array(leaf)) {
                    fail(line_no, "'" + leaf + "' already defined as a table array");
                }
                current = &cursor->tables[leaf];
            }
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            fail(line_no, "expected 'key = value' or a [table] header");
        }
        std::string key = trim(line.substr(0, eq));
        if (key.size() >= 2 && key.front() == '"' && key.back() == '"') {
            key = key.substr(1, key.size() - 2);
        } else {
            if (key.empty()) {
                fail(line_no, "empty key");
            }
            for (char ch : key) {
                if (!is_bare_key_char(ch)) {
                    fail(line_no, "invalid character in key '" + key + "'");
                }
            }
        }
        if (current->has_value(key) || current->has_table(key) ||
            current->has_table_array(key)) {
            fail(line_no, "duplicate key '" + key + "'");
        }

        const std::string value_text = trim(line.substr(eq + 1));
        ValueParser parser{value_text, 0, line_no};
        const Value value = parser.parse_value();
        parser.skip_spaces();
        if (parser.pos != value_text.size()) {
            fail(line_no, "trailing characters after value");
        }
        current->values.emplace(std::move(key), value);
    }
    return root;
}

Table load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse(buffer.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace riskpipe::toml
