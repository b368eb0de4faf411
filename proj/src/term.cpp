#include "bdiconc/term.hpp"

#include <cstdio>

namespace bdiconc {

char arith_op_symbol(ArithOp op)
{
    switch (op) {
        case ArithOp::Add: return '+';
        case ArithOp::Sub: return '-';
        case ArithOp::Mul: return '*';
    }
    return '?';
}

Term Term::atom(std::string name)
{
    Term t;
    t.kind_ = TermKind::Atom;
    t.text_ = std::move(name);
    return t;
}

Term Term::integer(std::int64_t value)
{
    Term t;
    t.kind_ = TermKind::Int;
    t.int_ = value;
    return t;
}

Term Term::string(std::string value)
{
    Term t;
    t.kind_ = TermKind::Str;
    t.text_ = std::move(value);
    return t;
}

Term Term::var(std::string name)
{
    Term t;
    t.kind_ = TermKind::Var;
    t.text_ = std::move(name);
    return t;
}

Term Term::structure(std::string functor, std::vector<Term> args)
{
    if (args.empty()) return atom(std::move(functor));
    Term t;
    t.kind_ = TermKind::Struct;
    t.text_ = std::move(functor);
    t.args_ = std::move(args);
    return t;
}

Term Term::arith(ArithOp op, Term lhs, Term rhs)
{
    Term t;
    t.kind_ = TermKind::Arith;
    t.op_ = op;
    t.args_.reserve(2);
    t.args_.push_back(std::move(lhs));
    t.args_.push_back(std::move(rhs));
    return t;
}

bool Term::is_ground() const
{
    if (kind_ == TermKind::Var) return false;
    for (const auto& a : args_)
        if (!a.is_ground()) return false;
    return true;
}

bool Term::is_resolved() const
{
    if (kind_ == TermKind::Var || kind_ == TermKind::Arith) return false;
    for (const auto& a : args_)
        if (!a.is_resolved()) return false;
    return true;
}

void Term::collect_vars(std::set<std::string>& out) const
{
    if (kind_ == TermKind::Var) {
        out.insert(text_);
        return;
    }
    for (const auto& a : args_) a.collect_vars(out);
}

bool operator==(const Term& a, const Term& b)
{
    if (a.kind_ != b.kind_) return false;
    switch (a.kind_) {
        case TermKind::Int: return a.int_ == b.int_;
        case TermKind::Atom:
        case TermKind::Str:
        case TermKind::Var: return a.text_ == b.text_;
        case TermKind::Struct: return a.text_ == b.text_ && a.args_ == b.args_;
        case TermKind::Arith: return a.op_ == b.op_ && a.args_ == b.args_;
    }
    return false;
}

std::string quote_string(std::string_view raw)
{
    std::string out;
    out.reserve(raw.size() + 2);
    out.push_back('"');
    for (unsigned char c : raw) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (c < 0x20 || c == 0x7f || c == '|') {
                    char buf[5];
                    std::snprintf(buf, sizeof buf, "\\x%02x", c);
                    out += buf;
                } else {
                    out.push_back(static_cast<char>(c));
                }
        }
    }
    out.push_back('"');
    return out;
}

namespace {

int precedence(const Term& t)
{
    if (!t.is(TermKind::Arith)) return 3;
    return t.op() == ArithOp::Mul ? 2 : 1;
}

} // namespace

void Term::write_canonical(std::string& out) const
{
    switch (kind_) {
        case TermKind::Atom:
        case TermKind::Var: out += text_; break;
        case TermKind::Int: out += std::to_string(int_); break;
        case TermKind::Str: out += quote_string(text_); break;
        case TermKind::Struct:
            out += text_;
            out.push_back('(');
            for (std::size_t i = 0; i < args_.size(); ++i) {
                if (i) out.push_back(',');
                args_[i].write_canonical(out);
            }
            out.push_back(')');
            break;
        case TermKind::Arith: {
            // Left-associative: the right operand needs parentheses at equal
            // precedence, the left one only at lower precedence.
            const int p = precedence(*this);
            const bool paren_l = precedence(args_[0]) < p;
            const bool paren_r = precedence(args_[1]) <= p;
            if (paren_l) out.push_back('(');
            args_[0].write_canonical(out);
            if (paren_l) out.push_back(')');
            out.push_back(arith_op_symbol(op_));
            if (paren_r) out.push_back('(');
            args_[1].write_canonical(out);
            if (paren_r) out.push_back(')');
            break;
        }
    }
}

std::string Term::canonical() const
{
    std::string out;
    write_canonical(out);
    return out;
}

namespace {

bool is_ident_tail(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

} // namespace

bool is_identifier(std::string_view s)
{
    if (s.empty() || !(s[0] >= 'a' && s[0] <= 'z')) return false;
    for (char c : s.substr(1))
        if (!is_ident_tail(c)) return false;
    return true;
}

bool is_variable_name(std::string_view s)
{
    if (s.empty() || !((s[0] >= 'A' && s[0] <= 'Z') || s[0] == '_')) return false;
    for (char c : s.substr(1))
        if (!is_ident_tail(c)) return false;
    return true;
}

} // namespace bdiconc
