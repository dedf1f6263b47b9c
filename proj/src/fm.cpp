#include "fm.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace daut::fm {

namespace {

struct Row {
    LinTerm t;
    Rel rel; // Lt, Le or Eq
    Origin origin;
};

Origin combine(const Origin& a, const Rational& ka, const Origin& b, const Rational& kb) {
    Origin out;
    auto i = a.begin(), j = b.begin();
    while (i != a.end() || j != b.end()) {
        if (j == b.end() || (i != a.end() && i->first < j->first)) {
            out.emplace_back(i->first, i->second * ka);
            ++i;
        } else if (i == a.end() || j->first < i->first) {
            out.emplace_back(j->first, j->second * kb);
            ++j;
        } else {
            Rational s = i->second * ka + j->second * kb;
            if (s != 0) out.emplace_back(i->first, s);
            ++i, ++j;
        }
    }
    return out;
}

Row add(const Row& a, const Rational& ka, const Row& b, const Rational& kb) {
    Row r;
    r.t = a.t * ka + b.t * kb;
    r.origin = combine(a.origin, ka, b.origin, kb);
    if (a.rel == Rel::Lt || b.rel == Rel::Lt) r.rel = Rel::Lt;
    else if (a.rel == Rel::Le || b.rel == Rel::Le) r.rel = Rel::Le;
    else r.rel = Rel::Eq;
    return r;
}

// true if a constant row is contradictory
bool violated(const Row& r) {
    const Rational& c = r.t.constant();
    switch (r.rel) {
    case Rel::Le: return c > 0;
    case Rel::Lt: return c >= 0;
    case Rel::Eq: return c != 0;
    default: return false;
    }
}

struct Step {
    VarRef v;
    bool is_eq = false;
    LinTerm value;           // is_eq: v = value
    std::vector<Row> lower;  // rows with negative coefficient of v
    std::vector<Row> upper;  // rows with positive coefficient of v
};

class Engine {
public:
    explicit Engine(const std::vector<Atom>& atoms) {
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (atoms[i].rel == Rel::Ne) throw std::invalid_argument("fm: != atom must be split first");
            rows_.push_back(Row{atoms[i].term, atoms[i].rel, {{static_cast<int>(i), Rational(1)}}});
        }
    }

    // Eliminates the given variables (all when `only` is null).
    // Returns false on contradiction (conflict_ set).
    bool run(const std::vector<VarRef>* only) {
        if (!filter_constants()) return false;
        auto wanted = [&](const VarRef& v) {
            return !only || std::find(only->begin(), only->end(), v) != only->end();
        };
        // equalities first
        for (;;) {
            int pick = -1;
            VarRef var;
            for (std::size_t i = 0; i < rows_.size() && pick < 0; ++i) {
                if (rows_[i].rel != Rel::Eq) continue;
                for (const auto& [v, c] : rows_[i].t.coeffs())
                    if (wanted(v)) {
                        pick = static_cast<int>(i);
                        var = v;
                        break;
                    }
            }
            if (pick < 0) break;
            Row eq = rows_[pick];
            rows_.erase(rows_.begin() + pick);
            Rational a = eq.t.coeff(var);
            Step st;
            st.v = var;
            st.is_eq = true;
            st.value = eq.t;
            st.value.remove(var);
            st.value *= Rational(-1 / a);
            steps_.push_back(std::move(st));
            for (auto& r : rows_) {
                Rational b = r.t.coeff(var);
                if (b == 0) continue;
                r = add(r, Rational(1), eq, Rational(-b / a));
            }
            if (!filter_constants()) return false;
        }
        // inequalities
        for (;;) {
            dedupe();
            std::map<VarRef, std::pair<std::size_t, std::size_t>> counts;
            for (const auto& r : rows_)
                for (const auto& [v, c] : r.t.coeffs()) {
                    if (!wanted(v)) continue;
                    auto& pc = counts[v];
                    (c > 0 ? pc.first : pc.second)++;
                }
            if (counts.empty()) break;
            VarRef var;
            bool first = true;
            long best = 0;
            for (const auto& [v, pc] : counts) {
                long cost = static_cast<long>(pc.first * pc.second) - static_cast<long>(pc.first + pc.second);
                if (first || cost < best) {
                    first = false;
                    best = cost;
                    var = v;
                }
            }
            Step st;
            st.v = var;
            std::vector<Row> rest;
            for (auto& r : rows_) {
                Rational c = r.t.coeff(var);
                if (c > 0) st.upper.push_back(std::move(r));
                else if (c < 0) st.lower.push_back(std::move(r));
                else rest.push_back(std::move(r));
            }
            for (const auto& u : st.upper) {
                Rational a = u.t.coeff(var);
                for (const auto& l : st.lower) {
                    Rational b = -l.t.coeff(var);
                    rest.push_back(add(u, b, l, a));
                }
            }
            rows_ = std::move(rest);
            steps_.push_back(std::move(st));
            if (!filter_constants()) return false;
        }
        return true;
    }

    Valuation model(const std::vector<Atom>& atoms) const {
        Valuation m;
        for (const auto& a : atoms)
            for (const auto& [v, c] : a.term.coeffs()) m.emplace(v, 0);
        for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
            const Step& st = *it;
            if (st.is_eq) {
                m[st.v] = st.value.eval(m);
                continue;
            }
            // bound from a row c·v + rest rel 0 is v rel -rest/c
            std::optional<Rational> lo, hi;
            bool lo_strict = false, hi_strict = false;
            for (const auto& r : st.upper) {
                LinTerm rest = r.t;
                Rational c = rest.remove(st.v);
                Rational b = -rest.eval(m) / c;
                bool s = r.rel == Rel::Lt;
                if (!hi || b < *hi || (b == *hi && s)) hi = b, hi_strict = s;
                if (r.rel == Rel::Eq) { // cannot happen after equality phase, kept for safety
                    lo = b, lo_strict = false;
                }
            }
            for (const auto& r : st.lower) {
                LinTerm rest = r.t;
                Rational c = rest.remove(st.v);
                Rational b = -rest.eval(m) / c;
                bool s = r.rel == Rel::Lt;
                if (!lo || b > *lo || (b == *lo && s)) lo = b, lo_strict = s;
            }
            auto ok = [&](const Rational& x) {
                if (lo && (x < *lo || (x == *lo && lo_strict))) return false;
                if (hi && (x > *hi || (x == *hi && hi_strict))) return false;
                return true;
            };
            Rational pick = 0;
            if (!ok(pick)) {
                bool found = false;
                if (lo) {
                    Rational c = lo_strict ? Rational(floor(*lo) + 1) : ceil(*lo);
                    if (ok(c)) pick = c, found = true;
                }
                if (!found && hi) {
                    Rational c = hi_strict ? Rational(ceil(*hi) - 1) : floor(*hi);
                    if (ok(c)) pick = c, found = true;
                }
                if (!found) pick = (lo && hi) ? Rational((*lo + *hi) / 2) : (lo ? *lo : *hi);
            }
            m[st.v] = pick;
        }
        return m;
    }

    std::vector<Row>& rows() { return rows_; }
    const Origin& conflict() const { return conflict_; }

private:
    bool filter_constants() {
        std::vector<Row> keep;
        keep.reserve(rows_.size());
        for (auto& r : rows_) {
            if (!r.t.is_constant()) {
                keep.push_back(std::move(r));
                continue;
            }
            if (violated(r)) {
                conflict_ = r.origin;
                return false;
            }
        }
        rows_ = std::move(keep);
        return true;
    }

    // Normalizes inequality rows so the leading coefficient has magnitude 1 and
    // keeps only the tightest row per left-hand side.
    void dedupe() {
        std::map<std::vector<LinTerm::Entry>, std::size_t> seen;
        std::vector<Row> out;
        for (auto& r : rows_) {
            if (r.rel == Rel::Eq) {
                out.push_back(std::move(r));
                continue;
            }
            Rational lead = r.t.coeffs().front().second;
            if (lead < 0) lead = -lead;
            if (lead != 1) {
                Rational k = 1 / lead;
                r.t *= k;
                for (auto& o : r.origin) o.second *= k;
            }
            auto [it, fresh] = seen.emplace(r.t.coeffs(), out.size());
            if (fresh) {
                out.push_back(std::move(r));
                continue;
            }
            Row& old = out[it->second];
            const Rational& c_old = old.t.constant();
            const Rational& c_new = r.t.constant();
            if (c_new > c_old || (c_new == c_old && r.rel == Rel::Lt && old.rel != Rel::Lt)) old = std::move(r);
        }
        rows_ = std::move(out);
    }

    std::vector<Row> rows_;
    std::vector<Step> steps_;
    Origin conflict_;
};

} // namespace

Result solve(const std::vector<Atom>& atoms, bool want_model) {
    Engine e(atoms);
    Result r;
    r.feasible = e.run(nullptr);
    if (!r.feasible) r.farkas = e.conflict();
    else if (want_model) r.model = e.model(atoms);
    return r;
}

std::optional<std::vector<Atom>> project(const std::vector<Atom>& atoms, const std::vector<VarRef>& elim) {
    Engine e(atoms);
    if (!e.run(&elim)) return std::nullopt;
    std::vector<Atom> out;
    for (const auto& r : e.rows()) {
        bool value = true;
        auto a = canonical_atom(r.t, r.rel, &value);
        if (!a) {
            if (!value) return std::nullopt;
            continue;
        }
        if (std::find(out.begin(), out.end(), *a) == out.end()) out.push_back(std::move(*a));
    }
    return out;
}

} // namespace daut::fm
