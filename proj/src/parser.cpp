#include "bdiconc/parser.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <sstream>

namespace bdiconc {

ParseError::ParseError(std::size_t line, std::size_t column, std::vector<std::string> expected, std::string found)
    : std::runtime_error([&] {
          std::sort(expected.begin(), expected.end());
          expected.erase(std::unique(expected.begin(), expected.end()), expected.end());
          std::ostringstream os;
          os << line << ':' << column << ": expected ";
          if (expected.size() > 1) os << "one of ";
          for (std::size_t i = 0; i < expected.size(); ++i) os << (i ? ", " : "") << expected[i];
          os << ", found " << found;
          return os.str();
      }())
    , line_(line)
    , column_(column)
    , expected_(std::move(expected))
    , found_(std::move(found))
{
    std::sort(expected_.begin(), expected_.end());
    expected_.erase(std::unique(expected_.begin(), expected_.end()), expected_.end());
}

namespace {

enum class Tok { Ident, Var, Int, String, Action, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;   // identifier/var/action name, punct symbol, digits, or decoded string
    std::size_t line = 1;
    std::size_t column = 1;
};

std::string describe(const Token& t)
{
    switch (t.kind) {
        case Tok::End: return "end of input";
        case Tok::String: return quote_string(t.text);
        default: return "'" + t.text + "'";
    }
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.line = line_;
            t.column = col_;
            if (pos_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            const char c = src_[pos_];
            if (is_lower(c)) {
                t.kind = Tok::Ident;
                t.text = take_word();
            } else if (is_upper(c) || c == '_') {
                t.kind = Tok::Var;
                t.text = take_word();
            } else if (is_digit(c)) {
                t.kind = Tok::Int;
                while (pos_ < src_.size() && is_digit(src_[pos_])) t.text.push_back(advance());
            } else if (c == '"') {
                t.kind = Tok::String;
                t.text = take_string(t);
            } else if (c == '.' && pos_ + 1 < src_.size() && is_lower(src_[pos_ + 1])) {
                advance();
                t.kind = Tok::Action;
                t.text = "." + take_word();
            } else {
                t.kind = Tok::Punct;
                t.text = take_punct(t);
            }
            out.push_back(std::move(t));
        }
    }

private:
    static bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
    static bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_word(char c) { return is_lower(c) || is_upper(c) || is_digit(c) || c == '_'; }

    char advance()
    {
        const char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_space()
    {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    std::string take_word()
    {
        std::string w;
        while (pos_ < src_.size() && is_word(src_[pos_])) w.push_back(advance());
        return w;
    }

    [[noreturn]] void fail(const Token& at, std::string expected, std::string found)
    {
        throw ParseError(at.line, at.column, {std::move(expected)}, std::move(found));
    }

    std::string take_string(const Token& start)
    {
        advance(); // opening quote
        std::string out;
        for (;;) {
            if (pos_ >= src_.size()) fail(start, "closing '\"'", "end of input");
            const char c = advance();
            if (c == '"') return out;
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (pos_ >= src_.size()) fail(start, "escape sequence", "end of input");
            const char e = advance();
            switch (e) {
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case 'x': {
                    if (pos_ + 2 > src_.size()) fail(start, "two hex digits", "end of input");
                    unsigned value = 0;
                    const auto* first = src_.data() + pos_;
                    auto [ptr, ec] = std::from_chars(first, first + 2, value, 16);
                    if (ec != std::errc{} || ptr != first + 2) fail(start, "two hex digits", std::string(first, 2));
                    advance();
                    advance();
                    out.push_back(static_cast<char>(value));
                    break;
                }
                default: fail(start, "escape sequence", std::string("'\\") + e + "'");
            }
        }
    }

    std::string take_punct(const Token& at)
    {
        static constexpr std::string_view two[] = {"<-", "<=", ">=", "==", "!="};
        for (auto p : two) {
            if (src_.substr(pos_, 2) == p) {
                advance();
                advance();
                return std::string(p);
            }
        }
        static constexpr std::string_view one = "{}(),.;:&*+-!<>";
        const char c = src_[pos_];
        if (one.find(c) == std::string_view::npos) fail(at, "token", std::string("'") + c + "'");
        advance();
        return std::string(1, c);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(Lexer(src).run()) {}

    MasSpec spec()
    {
        std::vector<AgentDef> agents;
        do {
            agents.push_back(agent());
        } while (!at_end());
        return MasSpec(std::move(agents));
    }

    Term lone_term()
    {
        Term t = arg();
        if (!at_end()) error({"end of input"});
        return t;
    }

private:
    const Token& peek(std::size_t ahead = 0) const
    {
        const std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
        return toks_[i];
    }
    bool at_end() const { return peek().kind == Tok::End; }
    Token next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

    bool is_punct(std::string_view p, std::size_t ahead = 0) const
    {
        const auto& t = peek(ahead);
        return t.kind == Tok::Punct && t.text == p;
    }
    bool is_keyword(std::string_view k) const { return peek().kind == Tok::Ident && peek().text == k; }

    [[noreturn]] void error(std::vector<std::string> expected) const
    {
        const auto& t = peek();
        throw ParseError(t.line, t.column, std::move(expected), describe(t));
    }

    void expect_punct(std::string_view p)
    {
        if (!is_punct(p)) error({"'" + std::string(p) + "'"});
        ++pos_;
    }

    void expect_keyword(std::string_view k)
    {
        if (!is_keyword(k)) error({"'" + std::string(k) + "'"});
        ++pos_;
    }

    std::string ident()
    {
        if (peek().kind != Tok::Ident) error({"IDENT"});
        return next().text;
    }

    std::int64_t int_literal(bool negative)
    {
        if (peek().kind != Tok::Int) error({"INT"});
        const Token& t = peek();
        std::uint64_t magnitude = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), magnitude);
        const std::uint64_t limit = negative ? std::uint64_t{1} << 63 : (std::uint64_t{1} << 63) - 1;
        if (ec != std::errc{} || magnitude > limit)
            throw ParseError(t.line, t.column, {"64-bit integer"}, describe(t));
        ++pos_;
        if (!negative) return static_cast<std::int64_t>(magnitude);
        if (magnitude == (std::uint64_t{1} << 63)) return std::numeric_limits<std::int64_t>::min();
        return -static_cast<std::int64_t>(magnitude);
    }

    AgentDef agent()
    {
        expect_keyword("agent");
        AgentDef a;
        a.name = ident();
        if (is_punct("*")) {
            ++pos_;
            a.replicas = int_literal(false);
        }
        expect_punct("{");
        std::size_t plan_index = 0;
        while (!is_punct("}")) {
            if (is_keyword("belief")) {
                ++pos_;
                a.initial_beliefs.push_back(term());
                expect_punct(".");
            } else if (is_keyword("goal")) {
                ++pos_;
                expect_punct("!");
                a.initial_goals.push_back(term());
                expect_punct(".");
            } else if (is_keyword("plan")) {
                ++pos_;
                a.plans.push_back(plan(plan_index++));
            } else {
                error({"'belief'", "'goal'", "'plan'", "'}'"});
            }
        }
        ++pos_;
        return a;
    }

    PlanDef plan(std::size_t index)
    {
        PlanDef p;
        p.declaration_index = index;
        p.trigger = trigger();
        if (is_punct(":")) {
            ++pos_;
            p.context.push_back(condition());
            while (is_punct("&")) {
                ++pos_;
                p.context.push_back(condition());
            }
        }
        if (!is_punct("<-")) error(p.context.empty() ? std::vector<std::string>{"':'", "'<-'"}
                                                      : std::vector<std::string>{"'&'", "'<-'"});
        ++pos_;
        p.body.push_back(body_step());
        while (is_punct(";")) {
            ++pos_;
            p.body.push_back(body_step());
        }
        if (!is_punct(".")) error({"';'", "'.'"});
        ++pos_;
        return p;
    }

    Trigger trigger()
    {
        Trigger t;
        if (is_punct("+")) {
            ++pos_;
            if (is_punct("!")) {
                ++pos_;
                t.kind = TriggerKind::AddGoal;
            } else {
                t.kind = TriggerKind::AddBelief;
            }
        } else if (is_punct("-")) {
            ++pos_;
            t.kind = TriggerKind::DelBelief;
        } else {
            error({"'+'", "'-'", "'+!'"});
        }
        t.pattern = callable_term();
        return t;
    }

    Term callable_term()
    {
        if (peek().kind != Tok::Ident) error({"IDENT"});
        return term();
    }

    Condition condition()
    {
        if (peek().kind == Tok::Ident) return BeliefTest{term()};
        const auto& t = peek();
        if (t.kind != Tok::Var && t.kind != Tok::Int && !is_punct("-") && !is_punct("("))
            error({"IDENT", "VAR", "INT", "'('"});
        Compare c;
        c.lhs = expr();
        static const std::pair<std::string_view, CompareOp> ops[] = {
            {"<", CompareOp::Lt}, {"<=", CompareOp::Le}, {">", CompareOp::Gt},
            {">=", CompareOp::Ge}, {"==", CompareOp::Eq}, {"!=", CompareOp::Ne},
        };
        bool found = false;
        for (const auto& [sym, op] : ops) {
            if (is_punct(sym)) {
                c.op = op;
                found = true;
                break;
            }
        }
        if (!found) error({"'<'", "'<='", "'>'", "'>='", "'=='", "'!='", "'+'", "'-'", "'*'"});
        ++pos_;
        c.rhs = expr();
        return c;
    }

    BodyStep body_step()
    {
        if (is_punct("+")) {
            ++pos_;
            return step::AddBelief{term()};
        }
        if (is_punct("-")) {
            ++pos_;
            return step::DelBelief{term()};
        }
        if (is_punct("!")) {
            ++pos_;
            return step::AdoptGoal{callable_term()};
        }
        if (peek().kind == Tok::Action) {
            const std::string name = peek().text;
            if (name == ".send") {
                ++pos_;
                expect_punct("(");
                step::Send s;
                if (peek().kind == Tok::Ident) s.receiver = Term::atom(next().text);
                else if (peek().kind == Tok::Var) s.receiver = Term::var(next().text);
                else error({"IDENT", "VAR"});
                expect_punct(",");
                if (is_keyword("tell")) s.performative = Performative::Tell;
                else if (is_keyword("achieve")) s.performative = Performative::Achieve;
                else error({"'tell'", "'achieve'"});
                ++pos_;
                expect_punct(",");
                s.content = term();
                expect_punct(")");
                return s;
            }
            if (name == ".print") {
                ++pos_;
                expect_punct("(");
                step::Print p{arg()};
                expect_punct(")");
                return p;
            }
            if (name == ".halt") {
                ++pos_;
                return step::Halt{};
            }
        }
        error({"'+'", "'-'", "'!'", "'.send'", "'.print'", "'.halt'"});
    }

    // term := IDENT ("(" arg ("," arg)* ")")? | INT | STRING | VAR
    Term term()
    {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Ident: {
                std::string name = next().text;
                if (!is_punct("(")) return Term::atom(std::move(name));
                ++pos_;
                std::vector<Term> args;
                args.push_back(arg());
                while (is_punct(",")) {
                    ++pos_;
                    args.push_back(arg());
                }
                expect_punct(")");
                return Term::structure(std::move(name), std::move(args));
            }
            case Tok::Int: return Term::integer(int_literal(false));
            case Tok::String: return Term::string(next().text);
            case Tok::Var: return Term::var(next().text);
            default: error({"IDENT", "INT", "STRING", "VAR"});
        }
    }

    // arg := term | expr
    Term arg() { return expr(); }

    Term expr()
    {
        Term lhs = product();
        while (is_punct("+") || is_punct("-")) {
            const ArithOp op = next().text == "+" ? ArithOp::Add : ArithOp::Sub;
            require_numeric(lhs);
            Term rhs = product();
            require_numeric(rhs);
            lhs = Term::arith(op, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    Term product()
    {
        Term lhs = primary();
        while (is_punct("*")) {
            ++pos_;
            require_numeric(lhs);
            Term rhs = primary();
            require_numeric(rhs);
            lhs = Term::arith(ArithOp::Mul, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    Term primary()
    {
        if (is_punct("-")) {
            ++pos_;
            return Term::integer(int_literal(true));
        }
        if (is_punct("(")) {
            ++pos_;
            last_primary_ = peek();
            Term inner = expr();
            require_numeric(inner);
            expect_punct(")");
            return inner;
        }
        last_primary_ = peek();
        return term();
    }

    void require_numeric(const Term& t) const
    {
        if (t.is(TermKind::Int) || t.is(TermKind::Var) || t.is(TermKind::Arith)) return;
        throw ParseError(last_primary_.line, last_primary_.column, {"INT", "VAR"}, t.canonical());
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    Token last_primary_;
};

} // namespace

MasSpec parse_spec(std::string_view source)
{
    return Parser(source).spec();
}

Term parse_term(std::string_view source)
{
    return Parser(source).lone_term();
}

} // namespace bdiconc
