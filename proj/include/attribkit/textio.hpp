#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace attribkit {

// All reals written to files go through this: 17 significant digits round-trip
// a binary64 value exactly.
inline std::string format_real(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return std::string(buf);
}

// Strict double parse: the whole token must be consumed.
inline double parse_real(const std::string& token, const std::string& context) {
    if (token.empty()) {
        throw std::invalid_argument(context + ": empty numeric field");
    }
    errno = 0;
    char* end = nullptr;
    double value = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || errno == ERANGE) {
        throw std::invalid_argument(context + ": not a number: \"" + token + "\"");
    }
    return value;
}

inline long parse_integer(const std::string& token, const std::string& context) {
    if (token.empty()) {
        throw std::invalid_argument(context + ": empty integer field");
    }
    errno = 0;
    char* end = nullptr;
    long value = std::strtol(token.c_str(), &end, 10);
    if (end != token.c_str() + token.size() || errno == ERANGE) {
        throw std::invalid_argument(context + ": not an integer: \"" + token + "\"");
    }
    return value;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::invalid_argument("cannot open file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open file for writing: " + path);
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

}  // namespace attribkit
