#include "daut/model.hpp"

#include "daut/sexpr.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace daut {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

const std::set<std::string> kKeywords = {"param", "globals", "automaton", "observer", "vars", "alphabet",
                                         "states", "init", "final", "rat", "int"};

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    void skip() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    bool at_end() {
        skip();
        return pos_ >= text_.size();
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, col_, msg); }
    [[noreturn]] void fail_at(int l, int c, const std::string& msg) const { throw ParseError(l, c, msg); }

    bool peek(std::string_view tok) {
        skip();
        if (text_.substr(pos_, tok.size()) != tok) return false;
        if (ident_start(tok[0]) && pos_ + tok.size() < text_.size() && ident_char(text_[pos_ + tok.size()])) return false;
        return true;
    }

    void expect(std::string_view tok) {
        if (!peek(tok)) fail("expected '" + std::string(tok) + "'");
        for (std::size_t i = 0; i < tok.size(); ++i) advance();
    }

    bool accept(std::string_view tok) {
        if (!peek(tok)) return false;
        for (std::size_t i = 0; i < tok.size(); ++i) advance();
        return true;
    }

    std::string ident(const char* what, bool keyword_ok = false) {
        skip();
        if (pos_ >= text_.size() || !ident_start(text_[pos_])) fail(std::string("expected ") + what);
        int l = line_, c = col_;
        std::string s;
        while (pos_ < text_.size() && ident_char(text_[pos_])) {
            s += text_[pos_];
            advance();
        }
        if (pos_ < text_.size() && (text_[pos_] == '\'' || text_[pos_] == '@'))
            fail(std::string("the character '") + text_[pos_] + "' is reserved and cannot appear in names");
        if (!keyword_ok && kKeywords.count(s)) fail_at(l, c, "'" + s + "' is a reserved word");
        return s;
    }

    Sort sort() {
        skip();
        if (accept("rat")) return Sort::Rational;
        if (accept("int")) return Sort::Integer;
        fail("expected a sort (rat or int)");
    }

    // The s-expression at the cursor, parsed as a formula.
    Formula formula(const SortLookup& sorts) {
        skip();
        int l = line_, c = col_;
        std::size_t start = pos_;
        std::size_t p = pos_;
        int tl = line_, tc = col_;
        read_sexpr(text_, p, tl, tc);
        while (pos_ < p) advance();
        return parse_formula(text_.substr(start, p - start), sorts, l, c);
    }

    int line() const { return line_; }
    int col() const { return col_; }

private:
    void advance() {
        if (text_[pos_] == '\n') ++line_, col_ = 1;
        else ++col_;
        ++pos_;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

DataAutomaton read_body(Reader& r, const std::string& name, std::map<std::string, Sort>& sorts,
                        const std::map<std::string, Sort>& params) {
    DataAutomaton a;
    a.name = name;
    std::map<std::string, Sort> local;
    std::set<std::string> events;
    bool have_init = false;
    struct PendingRule {
        std::string src, dst, event;
        Formula guard;
        int line, col;
    };
    std::vector<PendingRule> rules;
    SortLookup lookup = [&](const std::string& v) -> std::optional<Sort> {
        if (auto it = local.find(v); it != local.end()) return it->second;
        if (auto it = params.find(v); it != params.end()) return it->second;
        return std::nullopt;
    };
    r.expect("{");
    while (!r.accept("}")) {
        if (r.at_end()) r.fail("unterminated block for " + name);
        int l = r.line(), c = r.col();
        if (r.accept("vars")) {
            do {
                int vl = r.line(), vc = r.col();
                std::string v = r.ident("a variable name");
                Sort s = Sort::Rational;
                if (r.accept(":")) s = r.sort();
                if (params.count(v)) r.fail_at(vl, vc, "'" + v + "' is declared as a parameter");
                if (local.count(v)) r.fail_at(vl, vc, "variable '" + v + "' declared twice");
                if (auto it = sorts.find(v); it != sorts.end() && it->second != s)
                    r.fail_at(vl, vc, "variable '" + v + "' is declared with different sorts");
                sorts[v] = s;
                local[v] = s;
                a.vars.push_back(VarRef::plain(v, s));
            } while (r.accept(","));
            r.expect(";");
        } else if (r.accept("alphabet")) {
            do {
                int el = r.line(), ec = r.col();
                std::string e = r.ident("an event name", true);
                if (!events.insert(e).second) r.fail_at(el, ec, "event '" + e + "' listed twice");
                a.alphabet.push_back(e);
            } while (r.accept(","));
            r.expect(";");
        } else if (r.accept("states")) {
            do a.add_state(r.ident("a state name"));
            while (r.accept(","));
            r.expect(";");
        } else if (r.accept("init")) {
            if (have_init) r.fail_at(l, c, "second init declaration in " + name);
            a.initial = a.add_state(r.ident("a state name"));
            have_init = true;
            r.expect(";");
        } else if (r.accept("final")) {
            if (!r.peek(";")) {
                do a.finals.insert(a.add_state(r.ident("a state name")));
                while (r.accept(","));
            }
            r.expect(";");
        } else {
            PendingRule pr;
            pr.line = l;
            pr.col = c;
            pr.src = r.ident("a declaration or rule");
            r.expect("->");
            pr.dst = r.ident("a target state");
            r.expect(":");
            int el = r.line(), ec = r.col();
            pr.event = r.ident("an event name", true);
            if (!events.count(pr.event)) r.fail_at(el, ec, "event '" + pr.event + "' is not in the alphabet of " + name);
            r.expect(",");
            pr.guard = r.formula(lookup);
            r.expect(";");
            rules.push_back(std::move(pr));
        }
    }
    if (!have_init) r.fail(name + " has no init declaration");
    for (auto& pr : rules) {
        int s = a.add_state(pr.src), d = a.add_state(pr.dst);
        a.rules.push_back(Rule{s, pr.event, pr.guard, d});
    }
    std::vector<std::string> sorted(a.alphabet.begin(), a.alphabet.end());
    std::sort(sorted.begin(), sorted.end());
    a.alphabet = sorted;
    std::sort(a.vars.begin(), a.vars.end());
    return a;
}

std::string sort_name(Sort s) { return s == Sort::Integer ? "int" : "rat"; }

} // namespace

Model parse_model(std::string_view text) {
    Reader r(text);
    Model m;
    std::map<std::string, Sort> sorts;
    std::map<std::string, Sort> params;
    std::set<std::string> names;
    bool have_observer = false;
    std::vector<std::pair<std::string, std::pair<int, int>>> globals;
    int obs_line = 1, obs_col = 1;
    while (!r.at_end()) {
        int l = r.line(), c = r.col();
        if (r.accept("param")) {
            std::string p = r.ident("a parameter name");
            r.expect(":");
            Sort s = r.sort();
            r.expect(";");
            if (params.count(p) || sorts.count(p)) r.fail_at(l, c, "'" + p + "' declared twice");
            params[p] = s;
            m.net.params.push_back(VarRef::plain(p, s));
        } else if (r.accept("globals")) {
            do {
                int gl = r.line(), gc = r.col();
                globals.push_back({r.ident("a variable name"), {gl, gc}});
            } while (r.accept(","));
            r.expect(";");
        } else if (r.peek("automaton") || r.peek("observer")) {
            bool obs = r.accept("observer");
            if (!obs) r.expect("automaton");
            int nl = r.line(), nc = r.col();
            std::string name = r.ident("an automaton name");
            if (!names.insert(name).second) r.fail_at(nl, nc, "automaton '" + name + "' declared twice");
            if (obs) {
                if (have_observer) r.fail_at(l, c, "a model has exactly one observer");
                have_observer = true;
                obs_line = l;
                obs_col = c;
                std::map<std::string, Sort> obs_sorts = sorts;
                m.observer = read_body(r, name, obs_sorts, {});
                // sorts must agree with the network, checked below once all automata are read
            } else {
                m.net.components.push_back(read_body(r, name, sorts, params));
            }
        } else {
            r.fail("expected a declaration (param, globals, automaton or observer)");
        }
    }
    if (m.net.components.empty()) r.fail_at(1, 1, "the model declares no automaton");
    if (!have_observer) r.fail_at(1, 1, "the model declares no observer");
    std::sort(m.net.params.begin(), m.net.params.end());
    for (const auto& v : m.observer.vars) {
        auto it = sorts.find(v.base);
        if (it == sorts.end())
            r.fail_at(obs_line, obs_col, "observer variable '" + v.base + "' is not a variable of any network automaton");
        if (it->second != v.sort) r.fail_at(obs_line, obs_col, "observer variable '" + v.base + "' has a different sort");
    }
    for (const auto& [g, at] : globals) {
        auto it = sorts.find(g);
        if (it == sorts.end()) r.fail_at(at.first, at.second, "global '" + g + "' is not a network variable");
        m.net.globals.push_back(VarRef::plain(g, it->second));
    }
    std::sort(m.net.globals.begin(), m.net.globals.end());
    try {
        for (const auto& a : m.net.components) a.validate(m.net.params);
        m.observer.validate();
    } catch (const AutomatonError& e) {
        r.fail_at(1, 1, e.what());
    }
    return m;
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

std::string print_automaton(const DataAutomaton& a, const std::string& keyword) {
    std::ostringstream os;
    os << keyword << " " << a.name << " {\n";
    if (!a.vars.empty()) {
        os << "  vars ";
        for (std::size_t i = 0; i < a.vars.size(); ++i)
            os << (i ? ", " : "") << a.vars[i].base << " : " << sort_name(a.vars[i].sort);
        os << ";\n";
    }
    if (!a.alphabet.empty()) {
        os << "  alphabet ";
        for (std::size_t i = 0; i < a.alphabet.size(); ++i) os << (i ? ", " : "") << a.alphabet[i];
        os << ";\n";
    }
    os << "  states ";
    for (std::size_t i = 0; i < a.states.size(); ++i) os << (i ? ", " : "") << a.states[i];
    os << ";\n";
    os << "  init " << a.states[a.initial] << ";\n";
    os << "  final";
    bool first = true;
    for (int f : a.finals) {
        os << (first ? " " : ", ") << a.states[f];
        first = false;
    }
    os << ";\n";
    for (const auto& r : a.rules)
        os << "  " << a.states[r.src] << " -> " << a.states[r.dst] << " : " << r.event << ", " << to_string(r.guard)
           << ";\n";
    os << "}\n";
    return os.str();
}

std::string print_model(const Model& m) {
    std::ostringstream os;
    for (const auto& p : m.net.params) os << "param " << p.base << " : " << sort_name(p.sort) << ";\n";
    if (!m.net.globals.empty()) {
        os << "globals ";
        for (std::size_t i = 0; i < m.net.globals.size(); ++i) os << (i ? ", " : "") << m.net.globals[i].base;
        os << ";\n";
    }
    for (const auto& a : m.net.components) os << "\n" << print_automaton(a);
    os << "\n" << print_automaton(m.observer, "observer");
    return os.str();
}

bool structurally_equal(const DataAutomaton& a, const DataAutomaton& b) {
    if (a.name != b.name || a.alphabet != b.alphabet || a.states != b.states || a.initial != b.initial ||
        a.finals != b.finals || a.rules.size() != b.rules.size() || a.vars.size() != b.vars.size())
        return false;
    for (std::size_t i = 0; i < a.vars.size(); ++i)
        if (a.vars[i] != b.vars[i] || a.vars[i].sort != b.vars[i].sort) return false;
    for (std::size_t i = 0; i < a.rules.size(); ++i) {
        const Rule &x = a.rules[i], &y = b.rules[i];
        if (x.src != y.src || x.dst != y.dst || x.event != y.event || !(x.guard == y.guard)) return false;
    }
    return true;
}

bool structurally_equal(const Model& a, const Model& b) {
    if (a.net.components.size() != b.net.components.size() || a.net.params != b.net.params ||
        a.net.globals != b.net.globals)
        return false;
    for (std::size_t i = 0; i < a.net.components.size(); ++i)
        if (!structurally_equal(a.net.components[i], b.net.components[i])) return false;
    return structurally_equal(a.observer, b.observer);
}

} // namespace daut
