#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace bdiconc {

enum class TermKind : std::uint8_t { Atom, Int, Str, Var, Struct, Arith };

enum class ArithOp : std::uint8_t { Add, Sub, Mul };

char arith_op_symbol(ArithOp op);

// Logic term. Value type; children are held by value so copies are deep and
// terms can be shared freely across threads once built.
//
// Arith is the parsed form of an arithmetic argument such as `N+1`. It is
// never part of a resolved (runtime) term: resolve() evaluates it away.
class Term {
public:
    Term() = default;

    static Term atom(std::string name);
    static Term integer(std::int64_t value);
    static Term string(std::string value);
    static Term var(std::string name);
    static Term structure(std::string functor, std::vector<Term> args);
    static Term arith(ArithOp op, Term lhs, Term rhs);

    TermKind kind() const { return kind_; }
    bool is(TermKind k) const { return kind_ == k; }

    // Atom name, Var name, Struct functor, or Str contents.
    const std::string& text() const { return text_; }
    std::int64_t int_value() const { return int_; }
    ArithOp op() const { return op_; }
    // Struct arguments, or the two Arith operands.
    const std::vector<Term>& args() const { return args_; }

    // Atom or Struct: the shapes allowed as triggers and belief patterns.
    bool is_callable() const { return kind_ == TermKind::Atom || kind_ == TermKind::Struct; }
    bool is_anonymous_var() const { return kind_ == TermKind::Var && text_ == "_"; }

    // No Var at any depth.
    bool is_ground() const;
    // Ground and free of Arith nodes.
    bool is_resolved() const;

    void collect_vars(std::set<std::string>& out) const;

    // Canonical text: no whitespace, minimal parentheses around arithmetic,
    // strings quoted with backslash escapes. Never contains '|' or newlines.
    std::string canonical() const;
    void write_canonical(std::string& out) const;

    friend bool operator==(const Term& a, const Term& b);
    friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }

private:
    TermKind kind_ = TermKind::Atom;
    ArithOp op_ = ArithOp::Add;
    std::int64_t int_ = 0;
    std::string text_;
    std::vector<Term> args_;
};

// Quote and escape a string the way canonical term text does.
std::string quote_string(std::string_view raw);

bool is_identifier(std::string_view s);
bool is_variable_name(std::string_view s);

// Var name -> resolved term. Ordered so that iteration (and therefore any
// derived output) is deterministic.
using Substitution = std::map<std::string, Term>;

} // namespace bdiconc
