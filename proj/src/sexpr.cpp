#include "daut/sexpr.hpp"

#include "daut/formula.hpp"

#include <cctype>

namespace daut {

namespace {

void skip_ws(std::string_view text, std::size_t& pos, int& line, int& col) {
    while (pos < text.size()) {
        char c = text[pos];
        if (c == ';') {
            while (pos < text.size() && text[pos] != '\n') ++pos, ++col;
            continue;
        }
        if (!std::isspace(static_cast<unsigned char>(c))) break;
        if (c == '\n') ++line, col = 1;
        else ++col;
        ++pos;
    }
}

bool is_delim(char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ';';
}

} // namespace

SExpr read_sexpr(std::string_view text, std::size_t& pos, int& line, int& col) {
    skip_ws(text, pos, line, col);
    if (pos >= text.size()) throw ParseError(line, col, "unexpected end of input");
    SExpr e;
    e.line = line;
    e.col = col;
    char c = text[pos];
    if (c == '(') {
        e.is_list = true;
        ++pos, ++col;
        for (;;) {
            skip_ws(text, pos, line, col);
            if (pos >= text.size()) throw ParseError(e.line, e.col, "unbalanced '('");
            if (text[pos] == ')') {
                ++pos, ++col;
                break;
            }
            e.items.push_back(read_sexpr(text, pos, line, col));
        }
        return e;
    }
    if (c == ')') throw ParseError(line, col, "unexpected ')'");
    if (c == '|') {
        std::size_t end = text.find('|', pos + 1);
        if (end == std::string_view::npos) throw ParseError(line, col, "unterminated quoted symbol");
        e.atom = std::string(text.substr(pos + 1, end - pos - 1));
        e.quoted = true;
        for (std::size_t k = pos; k <= end; ++k) {
            if (text[k] == '\n') ++line, col = 1;
            else ++col;
        }
        pos = end + 1;
        return e;
    }
    if (c == '"') {
        std::size_t k = pos + 1;
        while (k < text.size()) {
            if (text[k] == '"') {
                if (k + 1 < text.size() && text[k + 1] == '"') {
                    k += 2;
                    continue;
                }
                break;
            }
            ++k;
        }
        if (k >= text.size()) throw ParseError(line, col, "unterminated string");
        e.atom = std::string(text.substr(pos, k - pos + 1));
        col += static_cast<int>(k - pos + 1);
        pos = k + 1;
        return e;
    }
    std::size_t start = pos;
    while (pos < text.size() && !is_delim(text[pos])) ++pos;
    e.atom = std::string(text.substr(start, pos - start));
    col += static_cast<int>(pos - start);
    return e;
}

SExpr read_sexpr(std::string_view text, int line, int col) {
    std::size_t pos = 0;
    SExpr e = read_sexpr(text, pos, line, col);
    skip_ws(text, pos, line, col);
    if (pos != text.size()) throw ParseError(line, col, "trailing input after expression");
    return e;
}

bool sexpr_complete(std::string_view text) {
    int depth = 0;
    bool seen = false;
    bool in_bar = false, in_str = false, in_comment = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_comment) {
            if (c == '\n') in_comment = false;
            continue;
        }
        if (in_bar) {
            if (c == '|') in_bar = false;
            continue;
        }
        if (in_str) {
            if (c == '"') in_str = false;
            continue;
        }
        switch (c) {
        case ';': in_comment = true; break;
        case '|': in_bar = true; seen = true; break;
        case '"': in_str = true; seen = true; break;
        case '(': ++depth; seen = true; break;
        case ')':
            --depth;
            if (depth == 0) return true;
            break;
        default:
            if (!std::isspace(static_cast<unsigned char>(c))) {
                seen = true;
                if (depth == 0 && (i + 1 == text.size() || is_delim(text[i + 1]))) {
                    // bare atom at top level, complete once a delimiter follows
                    if (i + 1 < text.size()) return true;
                }
            }
        }
    }
    (void)seen;
    return false;
}

std::string to_string(const SExpr& e) {
    if (!e.is_list) return e.quoted ? "|" + e.atom + "|" : e.atom;
    std::string s = "(";
    for (std::size_t i = 0; i < e.items.size(); ++i) {
        if (i) s += ' ';
        s += to_string(e.items[i]);
    }
    return s + ")";
}

} // namespace daut
