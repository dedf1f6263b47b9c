#include "daut/sexpr.hpp"
#include "daut/solver.hpp"

#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>

namespace daut {

namespace {

constexpr const char* kEndMarker = "@@daut-end";

std::string numeral(const Rational& q, bool real) {
    // canonical atoms only carry integers; keep rationals exact anyway
    auto mag = [&](const mpz_class& z) {
        std::string s = z.get_str();
        return real ? s + ".0" : s;
    };
    mpz_class num = abs(q.get_num());
    std::string body = q.get_den() == 1 ? mag(num) : "(/ " + mag(num) + " " + mag(q.get_den()) + ")";
    return q < 0 ? "(- " + body + ")" : body;
}

std::string term_smt(const LinTerm& t, bool real) {
    std::vector<std::string> parts;
    for (const auto& [v, c] : t.coeffs()) {
        std::string name = smt_name(v);
        if (real && v.sort == Sort::Integer) name = "(to_real " + name + ")";
        parts.push_back(c == 1 ? name : "(* " + numeral(c, real) + " " + name + ")");
    }
    if (t.constant() != 0 || parts.empty()) parts.push_back(numeral(t.constant(), real));
    if (parts.size() == 1) return parts.front();
    std::string s = "(+";
    for (const auto& p : parts) s += " " + p;
    return s + ")";
}

std::string atom_smt(const Atom& a) {
    bool real = std::any_of(a.term.coeffs().begin(), a.term.coeffs().end(),
                            [](const auto& e) { return e.first.sort == Sort::Rational; });
    LinTerm lhs = a.term;
    lhs.set_constant(0);
    std::string l = term_smt(lhs, real), r = numeral(Rational(-a.term.constant()), real);
    switch (a.rel) {
    case Rel::Lt: return "(< " + l + " " + r + ")";
    case Rel::Le: return "(<= " + l + " " + r + ")";
    case Rel::Eq: return "(= " + l + " " + r + ")";
    case Rel::Ne: return "(not (= " + l + " " + r + "))";
    }
    return "";
}

const char* logic_for(const VarSet& vars) {
    bool ints = false, reals = false;
    for (const auto& v : vars) (v.sort == Sort::Integer ? ints : reals) = true;
    if (ints && reals) return "QF_LIRA";
    return ints ? "QF_LIA" : "QF_LRA";
}

} // namespace

std::string smt_name(const VarRef& v) {
    return "|" + v.name() + "|";
}

std::string to_smtlib(const Formula& f) {
    switch (f.kind()) {
    case Kind::True: return "true";
    case Kind::False: return "false";
    case Kind::Atom: return atom_smt(f.atom());
    case Kind::Not: return "(not " + to_smtlib(f.body()) + ")";
    case Kind::And:
    case Kind::Or: {
        std::string s = f.kind() == Kind::And ? "(and" : "(or";
        for (const auto& g : f.args()) s += " " + to_smtlib(g);
        return s + ")";
    }
    case Kind::Exists:
    case Kind::Forall: {
        std::string s = f.kind() == Kind::Exists ? "(exists (" : "(forall (";
        for (const auto& v : f.bound()) s += "(" + smt_name(v) + (v.sort == Sort::Integer ? " Int)" : " Real)");
        return s + ") " + to_smtlib(f.body()) + ")";
    }
    }
    return "";
}

ExternalSolver::ExternalSolver(std::string command, std::chrono::milliseconds timeout, SolverOptions opts)
    : Solver(opts), command_(std::move(command)), timeout_(timeout) {
    std::signal(SIGPIPE, SIG_IGN);
    start();
}

ExternalSolver::~ExternalSolver() {
    stop();
}

void ExternalSolver::start() {
    int in[2], out[2];
    if (pipe(in) != 0 || pipe(out) != 0) throw SolverError(SolverError::Kind::Crash, "pipe: " + std::string(strerror(errno)));
    pid_t pid = fork();
    if (pid < 0) throw SolverError(SolverError::Kind::Crash, "fork: " + std::string(strerror(errno)));
    if (pid == 0) {
        dup2(in[0], STDIN_FILENO);
        dup2(out[1], STDOUT_FILENO);
        int devnull = open("/dev/null", O_WRONLY);
        if (devnull >= 0) dup2(devnull, STDERR_FILENO);
        close(in[0]), close(in[1]), close(out[0]), close(out[1]);
        execl("/bin/sh", "sh", "-c", ("exec " + command_).c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in[0]);
    close(out[1]);
    pid_ = pid;
    to_child_ = in[1];
    from_child_ = out[0];
    buffer_.clear();
}

void ExternalSolver::stop() {
    if (pid_ < 0) return;
    close(to_child_);
    close(from_child_);
    kill(pid_, SIGKILL);
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
}

void ExternalSolver::send(const std::string& text) {
    if (pid_ < 0) start();
    std::size_t off = 0;
    while (off < text.size()) {
        ssize_t n = write(to_child_, text.data() + off, text.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            int status = 0;
            waitpid(pid_, &status, 0);
            close(to_child_);
            close(from_child_);
            pid_ = -1;
            throw SolverError(SolverError::Kind::Crash,
                              "solver process exited (status " + std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -WTERMSIG(status)) + ")");
        }
        off += static_cast<std::size_t>(n);
    }
}

// One s-expression from the solver's output.
std::string ExternalSolver::read_response() {
    auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
        // try to cut a complete expression out of the buffer
        std::size_t i = 0;
        while (i < buffer_.size() && std::isspace(static_cast<unsigned char>(buffer_[i]))) ++i;
        if (i < buffer_.size()) {
            std::size_t end = std::string::npos;
            if (buffer_[i] == '(') {
                int depth = 0;
                bool bar = false, str = false;
                for (std::size_t k = i; k < buffer_.size(); ++k) {
                    char c = buffer_[k];
                    if (bar) { if (c == '|') bar = false; continue; }
                    if (str) { if (c == '"') str = false; continue; }
                    if (c == '|') bar = true;
                    else if (c == '"') str = true;
                    else if (c == '(') ++depth;
                    else if (c == ')' && --depth == 0) { end = k + 1; break; }
                }
            } else {
                std::size_t k = i;
                while (k < buffer_.size() && !std::isspace(static_cast<unsigned char>(buffer_[k]))) ++k;
                if (k < buffer_.size()) end = k;
            }
            if (end != std::string::npos) {
                std::string out = buffer_.substr(i, end - i);
                buffer_.erase(0, end);
                return out;
            }
        }
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            stop();
            throw SolverError(SolverError::Kind::Timeout, "no answer within " + std::to_string(timeout_.count()) + " ms");
        }
        pollfd p{from_child_, POLLIN, 0};
        int ms = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count()) + 1;
        int r = poll(&p, 1, ms);
        if (r < 0 && errno == EINTR) continue;
        if (r == 0) continue;
        char buf[4096];
        ssize_t n = read(from_child_, buf, sizeof buf);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            int status = 0;
            waitpid(pid_, &status, 0);
            close(to_child_);
            close(from_child_);
            pid_ = -1;
            std::string detail = WIFEXITED(status) ? "exit status " + std::to_string(WEXITSTATUS(status))
                                                   : "signal " + std::to_string(WTERMSIG(status));
            throw SolverError(SolverError::Kind::Crash, "solver process terminated (" + detail + ")");
        }
        buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

std::vector<std::string> ExternalSolver::batch(const std::string& cmds) {
    send(cmds + "\n(echo \"" + kEndMarker + "\")\n");
    std::vector<std::string> out;
    for (;;) {
        std::string r = read_response();
        if (r == kEndMarker || r == std::string("\"") + kEndMarker + "\"") return out;
        out.push_back(std::move(r));
    }
}

std::string ExternalSolver::raw_command(const std::string& cmd) {
    std::string all;
    for (const auto& r : batch(cmd)) all += (all.empty() ? "" : "\n") + r;
    return all;
}

std::string ExternalSolver::declare(const VarSet& vars) const {
    std::string s;
    for (const auto& v : vars) s += "(declare-fun " + smt_name(v) + " () " + (v.sort == Sort::Integer ? "Int" : "Real") + ")\n";
    return s;
}

namespace {

bool is_error(const std::string& r) {
    return r.rfind("(error", 0) == 0;
}

} // namespace

SatResult ExternalSolver::check(const Formula& f) {
    ++queries_;
    Formula g = eliminate_quantifiers(f, SolverOptions{opts_.cube_budget, IntegerMode::Relax});
    VarSet vars = free_vars(g);
    for (const auto& v : free_vars(f)) vars.insert(v);
    std::string cmds = "(reset)\n(set-option :produce-models true)\n(set-logic " + std::string(logic_for(vars)) + ")\n" +
                        declare(vars) + "(assert " + to_smtlib(g) + ")\n(check-sat)";
    std::vector<std::string> rs = batch(cmds);
    std::string answer;
    for (const auto& r : rs) {
        if (is_error(r)) throw SolverError(SolverError::Kind::ProtocolError, r);
        if (r == "sat" || r == "unsat" || r == "unknown") answer = r;
    }
    if (answer.empty()) throw SolverError(SolverError::Kind::ProtocolError, "no check-sat answer: " + (rs.empty() ? "" : rs.back()));
    if (answer == "unknown") throw SolverError(SolverError::Kind::ProtocolError, "solver answered unknown");
    SatResult res;
    res.sat = answer == "sat";
    if (!res.sat) return res;
    VarSet wanted = free_vars(f);
    if (wanted.empty()) return res;
    std::string names;
    for (const auto& v : wanted) names += " " + smt_name(v);
    std::vector<std::string> vr = batch(("(get-value (" + names.substr(1) + "))"));
    if (vr.empty() || is_error(vr.back())) throw SolverError(SolverError::Kind::ProtocolError, vr.empty() ? "empty get-value" : vr.back());
    SExpr e;
    try {
        e = read_sexpr(vr.back());
    } catch (const ParseError&) {
        throw SolverError(SolverError::Kind::ProtocolError, vr.back());
    }
    if (!e.is_list) throw SolverError(SolverError::Kind::ProtocolError, vr.back());
    auto no_vars = [](const std::string&) -> std::optional<Sort> { return std::nullopt; };
    for (const auto& pair : e.items) {
        if (!pair.is_list || pair.items.size() != 2 || pair.items[0].is_list)
            throw SolverError(SolverError::Kind::ProtocolError, vr.back());
        auto it = std::find_if(wanted.begin(), wanted.end(), [&](const VarRef& v) { return v.name() == pair.items[0].atom; });
        if (it == wanted.end()) throw SolverError(SolverError::Kind::ProtocolError, "value for undeclared " + pair.items[0].atom);
        try {
            LinTerm t = parse_term(to_string(pair.items[1]), no_vars);
            if (!t.is_constant()) throw ParseError(1, 1, "non-constant");
            res.model[*it] = t.constant();
        } catch (const ParseError&) {
            throw SolverError(SolverError::Kind::ProtocolError, "unparsable value " + to_string(pair.items[1]));
        }
    }
    for (const auto& v : wanted) res.model.emplace(v, 0);
    return res;
}

std::vector<Formula> ExternalSolver::sequence_interpolant(const Formula& phi, const std::vector<Formula>& thetas) {
    ++queries_;
    const int m = static_cast<int>(thetas.size());
    SolverOptions relaxed{opts_.cube_budget, IntegerMode::Relax};
    std::vector<Formula> parts{eliminate_quantifiers(to_step(phi, 0), relaxed)};
    for (int i = 0; i < m; ++i) parts.push_back(eliminate_quantifiers(to_step(thetas[i], i), relaxed));
    VarSet vars;
    for (const auto& p : parts) {
        auto vs = free_vars(p);
        vars.insert(vs.begin(), vs.end());
    }
    std::string cmds = "(reset)\n(set-option :produce-interpolants true)\n(set-logic " + std::string(logic_for(vars)) + ")\n" +
                        declare(vars);
    for (int i = 0; i <= m; ++i)
        cmds += "(assert (! " + to_smtlib(parts[i]) + " :interpolation-group g" + std::to_string(i) + "))\n";
    cmds += "(check-sat)";
    std::vector<std::string> rs = batch(cmds);
    bool native_ok = true;
    std::string answer;
    for (const auto& r : rs) {
        if (is_error(r) || r == "unsupported") native_ok = false;
        if (r == "sat" || r == "unsat" || r == "unknown") answer = r;
    }
    if (answer == "sat") throw SolverError(SolverError::Kind::SatInput, "path formula is satisfiable");
    std::vector<Formula> seq;
    if (answer == "unsat" && native_ok) {
        auto lookup = [&](const std::string& base) -> std::optional<Sort> {
            for (const auto& v : vars)
                if (v.base == base) return v.sort;
            return std::nullopt;
        };
        try {
            for (int i = 0; i < m; ++i) {
                std::string groups;
                for (int g = 0; g <= i; ++g) groups += (g ? " g" : "g") + std::to_string(g);
                std::vector<std::string> ir = batch(("(get-interpolant (" + groups + "))"));
                if (ir.empty() || is_error(ir.back()) || ir.back() == "unsupported") {
                    seq.clear();
                    break;
                }
                seq.push_back(retag(parse_formula(ir.back(), lookup), Tag::Step, i, Tag::Plain, 0));
            }
            if (!seq.empty() || m == 0) seq.push_back(bottom());
        } catch (const ParseError&) {
            seq.clear();
        }
    }
    if (!seq.empty() && validate_interpolant(*this, phi, thetas, seq)) return seq;
    ++fallbacks_;
    return builtin_sequence_interpolant(phi, thetas, relaxed);
}

std::unique_ptr<Solver> make_solver(const std::string& spec, std::chrono::milliseconds timeout, SolverOptions opts) {
    if (spec == "builtin") return std::make_unique<BuiltinSolver>(opts);
    if (spec.rfind("ext:", 0) == 0 && spec.size() > 4) return std::make_unique<ExternalSolver>(spec.substr(4), timeout, opts);
    throw std::invalid_argument("unknown solver '" + spec + "' (expected builtin or ext:<command>)");
}

} // namespace daut
