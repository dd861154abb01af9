#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace qslab {

enum class Quant : std::uint8_t { Exists, Forall };

inline Quant flip(Quant q) { return q == Quant::Exists ? Quant::Forall : Quant::Exists; }
inline char to_char(Quant q) { return q == Quant::Exists ? 'E' : 'A'; }

inline Quant quant_from_char(char c) {
    if (c == 'E') return Quant::Exists;
    if (c == 'A') return Quant::Forall;
    throw InvalidArgument(std::string("not a quantifier letter: '") + c + "'");
}

// A finite word over {E, A}; the empty word is allowed.
class Prefix {
public:
    Prefix() = default;
    explicit Prefix(std::vector<Quant> letters) : letters_(std::move(letters)) {}

    // Accepts "E"/"A" strings; "-" is read as the empty word.
    static Prefix parse(std::string_view s) {
        if (s == "-") return {};
        std::vector<Quant> out;
        out.reserve(s.size());
        for (char c : s) out.push_back(quant_from_char(c));
        return Prefix(std::move(out));
    }

    std::size_t size() const { return letters_.size(); }
    bool empty() const { return letters_.empty(); }
    Quant operator[](std::size_t i) const { return letters_[i]; }
    const std::vector<Quant>& letters() const { return letters_; }

    Prefix tail() const { return Prefix({letters_.begin() + (empty() ? 0 : 1), letters_.end()}); }

    std::string str() const {
        std::string s;
        for (Quant q : letters_) s += to_char(q);
        return s;
    }

    friend Prefix operator+(const Prefix& a, const Prefix& b) {
        std::vector<Quant> v = a.letters_;
        v.insert(v.end(), b.letters_.begin(), b.letters_.end());
        return Prefix(std::move(v));
    }
    friend bool operator==(const Prefix&, const Prefix&) = default;
    friend auto operator<=>(const Prefix& a, const Prefix& b) {
        if (a.size() != b.size()) return a.size() <=> b.size();
        return a.letters_ <=> b.letters_;
    }

private:
    std::vector<Quant> letters_;
};

using PrefixSet = std::set<Prefix>;

inline Prefix dual(const Prefix& p) {
    std::vector<Quant> v;
    v.reserve(p.size());
    for (Quant q : p.letters()) v.push_back(flip(q));
    return Prefix(std::move(v));
}

// p is obtained from q by deleting letters.
inline bool is_subsequence(const Prefix& p, const Prefix& q) {
    std::size_t i = 0;
    for (std::size_t j = 0; j < q.size() && i < p.size(); ++j)
        if (q[j] == p[i]) ++i;
    return i == p.size();
}

// All words of length at most n, shortest first.
inline std::vector<Prefix> all_prefixes_upto(std::size_t n) {
    std::vector<Prefix> out{Prefix{}};
    std::size_t begin = 0;
    for (std::size_t len = 1; len <= n; ++len) {
        std::size_t end = out.size();
        for (std::size_t i = begin; i < end; ++i)
            for (Quant q : {Quant::Exists, Quant::Forall}) out.push_back(out[i] + Prefix({q}));
        begin = end;
    }
    return out;
}

// Downward closure under subsequence.
inline PrefixSet downward_closure(const PrefixSet& ps) {
    PrefixSet out;
    for (const Prefix& p : ps) {
        std::size_t n = p.size();
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
            std::vector<Quant> v;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (std::uint64_t{1} << i)) v.push_back(p[i]);
            out.insert(Prefix(std::move(v)));
        }
    }
    return out;
}

struct RegexAtom {
    Quant letter;
    bool star = false;
    friend bool operator==(const RegexAtom&, const RegexAtom&) = default;
};

using RegexWord = std::vector<RegexAtom>;

inline std::string to_string(const RegexWord& w) {
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) s += ' ';
        s += to_char(w[i].letter);
        if (w[i].star) s += '*';
    }
    return s;
}

inline RegexWord dual(const RegexWord& w) {
    RegexWord out = w;
    for (RegexAtom& a : out) a.letter = flip(a.letter);
    return out;
}

// Block of n copies of q becomes 2n-1 atoms alternating dual(q)* and q.
inline RegexWord rosen_f(const Prefix& p) {
    if (p.empty()) throw InvalidArgument("rosen_f is undefined on the empty prefix");
    RegexWord out;
    std::size_t i = 0;
    while (i < p.size()) {
        std::size_t j = i;
        while (j < p.size() && p[j] == p[i]) ++j;
        std::size_t n = j - i;
        for (std::size_t k = 1; k <= 2 * n - 1; ++k) {
            if (k % 2 == 1) out.push_back({flip(p[i]), true});
            else out.push_back({p[i], false});
        }
        i = j;
    }
    return out;
}

// q is a subsequence of some word in the language of v.
inline bool in_gamma_minus(const Prefix& q, const RegexWord& v) {
    std::size_t i = 0;
    for (const RegexAtom& a : v) {
        if (a.star) {
            while (i < q.size() && q[i] == a.letter) ++i;
        } else if (i < q.size() && q[i] == a.letter) {
            ++i;
        }
    }
    return i == q.size();
}

inline PrefixSet f_p_m(const Prefix& p, std::size_t m) {
    RegexWord v = rosen_f(p);
    PrefixSet out;
    for (Prefix& q : all_prefixes_upto(m))
        if (in_gamma_minus(q, v)) out.insert(std::move(q));
    return out;
}

}  // namespace qslab
