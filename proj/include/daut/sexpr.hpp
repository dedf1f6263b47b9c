#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace daut {

struct SExpr {
    bool is_list = false;
    std::string atom; // symbol or literal; |quoted| symbols keep their bars stripped
    bool quoted = false;
    std::vector<SExpr> items;
    int line = 1;
    int col = 1;

    bool is_symbol(std::string_view s) const { return !is_list && !quoted && atom == s; }
};

// Reads one s-expression starting at `pos`; advances `pos` past it.
// Throws ParseError on malformed input.
SExpr read_sexpr(std::string_view text, std::size_t& pos, int& line, int& col);
SExpr read_sexpr(std::string_view text, int line = 1, int col = 1);
// True when `text` holds at least one complete s-expression (ignoring comments).
bool sexpr_complete(std::string_view text);

std::string to_string(const SExpr& e);

} // namespace daut
