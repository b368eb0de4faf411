#include "bdiconc/agent.hpp"

#include <algorithm>

namespace bdiconc {

EvalError::EvalError(EvalErrorCode code, std::string detail)
    : std::runtime_error([&] {
          switch (code) {
              case EvalErrorCode::UnboundVariable: return "unbound variable " + detail;
              case EvalErrorCode::NonIntegerOperand: return "non-integer operand " + detail;
              case EvalErrorCode::ArithmeticOverflow: return "arithmetic overflow in " + detail;
          }
          return detail;
      }())
    , code_(code)
    , detail_(std::move(detail))
{
}

// --- terms ---------------------------------------------------------------

std::int64_t eval_expr(const Term& e, const Substitution& bindings)
{
    switch (e.kind()) {
        case TermKind::Int: return e.int_value();
        case TermKind::Var: {
            auto it = e.is_anonymous_var() ? bindings.end() : bindings.find(e.text());
            if (it == bindings.end()) throw EvalError(EvalErrorCode::UnboundVariable, e.text());
            if (!it->second.is(TermKind::Int)) throw EvalError(EvalErrorCode::NonIntegerOperand, it->second.canonical());
            return it->second.int_value();
        }
        case TermKind::Arith: {
            const std::int64_t a = eval_expr(e.args()[0], bindings);
            const std::int64_t b = eval_expr(e.args()[1], bindings);
            std::int64_t r = 0;
            bool overflow = false;
            switch (e.op()) {
                case ArithOp::Add: overflow = __builtin_add_overflow(a, b, &r); break;
                case ArithOp::Sub: overflow = __builtin_sub_overflow(a, b, &r); break;
                case ArithOp::Mul: overflow = __builtin_mul_overflow(a, b, &r); break;
            }
            if (overflow) throw EvalError(EvalErrorCode::ArithmeticOverflow, e.canonical());
            return r;
        }
        default: throw EvalError(EvalErrorCode::NonIntegerOperand, e.canonical());
    }
}

Term resolve(const Term& t, const Substitution& bindings)
{
    switch (t.kind()) {
        case TermKind::Var: {
            auto it = t.is_anonymous_var() ? bindings.end() : bindings.find(t.text());
            if (it == bindings.end()) throw EvalError(EvalErrorCode::UnboundVariable, t.text());
            return it->second;
        }
        case TermKind::Arith: return Term::integer(eval_expr(t, bindings));
        case TermKind::Struct: {
            std::vector<Term> args;
            args.reserve(t.args().size());
            for (const auto& a : t.args()) args.push_back(resolve(a, bindings));
            return Term::structure(t.text(), std::move(args));
        }
        default: return t;
    }
}

namespace {

bool unify_into(const Term& pattern, const Term& ground, Substitution& s)
{
    switch (pattern.kind()) {
        case TermKind::Var: {
            if (pattern.is_anonymous_var()) return true;
            auto [it, inserted] = s.try_emplace(pattern.text(), ground);
            return inserted || it->second == ground;
        }
        case TermKind::Arith: {
            if (!ground.is(TermKind::Int)) return false;
            try {
                return eval_expr(pattern, s) == ground.int_value();
            } catch (const EvalError&) {
                return false;
            }
        }
        case TermKind::Struct: {
            if (!ground.is(TermKind::Struct) || ground.text() != pattern.text()
                || ground.args().size() != pattern.args().size())
                return false;
            for (std::size_t i = 0; i < pattern.args().size(); ++i)
                if (!unify_into(pattern.args()[i], ground.args()[i], s)) return false;
            return true;
        }
        default: return pattern == ground;
    }
}

bool solve(std::span<const Condition> conds, std::span<const Term> beliefs, const Substitution& s,
           std::optional<Substitution>& out)
{
    if (conds.empty()) {
        out = s;
        return true;
    }
    const Condition& c = conds.front();
    if (const auto* bt = std::get_if<BeliefTest>(&c)) {
        for (const auto& b : beliefs) {
            Substitution next = s;
            if (unify_into(bt->pattern, b, next) && solve(conds.subspan(1), beliefs, next, out)) return true;
        }
        return false;
    }
    if (!eval_compare(std::get<Compare>(c), s)) return false;
    return solve(conds.subspan(1), beliefs, s, out);
}

} // namespace

std::optional<Substitution> unify(const Term& pattern, const Term& ground, Substitution bindings)
{
    if (!unify_into(pattern, ground, bindings)) return std::nullopt;
    return bindings;
}

bool eval_compare(const Compare& c, const Substitution& bindings)
{
    std::int64_t l = 0;
    std::int64_t r = 0;
    try {
        l = eval_expr(c.lhs, bindings);
        r = eval_expr(c.rhs, bindings);
    } catch (const EvalError&) {
        return false;
    }
    switch (c.op) {
        case CompareOp::Lt: return l < r;
        case CompareOp::Le: return l <= r;
        case CompareOp::Gt: return l > r;
        case CompareOp::Ge: return l >= r;
        case CompareOp::Eq: return l == r;
        case CompareOp::Ne: return l != r;
    }
    return false;
}

std::optional<Substitution> match_context(std::span<const Condition> conds, std::span<const Term> beliefs,
                                          const Substitution& initial)
{
    std::optional<Substitution> out;
    solve(conds, beliefs, initial, out);
    return out;
}

// --- agent state ---------------------------------------------------------

bool operator==(const AgentState& a, const AgentState& b)
{
    const bool same_program = a.program == b.program || (a.program && b.program && *a.program == *b.program);
    const bool same_roster = a.roster == b.roster || (a.roster && b.roster && *a.roster == *b.roster);
    return same_program && same_roster && a.instance_name == b.instance_name && a.beliefs == b.beliefs
        && a.events == b.events && a.intentions == b.intentions && a.intention_cursor == b.intention_cursor
        && a.cycle_count == b.cycle_count && a.halted == b.halted && a.fault == b.fault
        && a.next_intention_id == b.next_intention_id && a.send_seq == b.send_seq;
}

AgentState make_agent_state(std::string instance_name, std::shared_ptr<const AgentDef> program,
                            std::shared_ptr<const Roster> roster)
{
    AgentState s;
    s.instance_name = std::move(instance_name);
    s.program = std::move(program);
    s.roster = std::move(roster);
    for (const auto& b : s.program->initial_beliefs) {
        if (std::find(s.beliefs.begin(), s.beliefs.end(), b) == s.beliefs.end()) s.beliefs.push_back(b);
    }
    for (const auto& g : s.program->initial_goals) s.events.push_back(Event{TriggerKind::AddGoal, g, {}, {}});
    return s;
}

bool is_quiescent(const AgentState& state, bool inbox_empty)
{
    return state.halted || (state.events.empty() && state.intentions.empty() && inbox_empty);
}

// --- reasoning cycle -----------------------------------------------------

namespace {

// A fault raised while executing a body step; carries the trace payload.
struct StepFault {
    std::string payload;
};

std::string fault_payload(const EvalError& e)
{
    switch (e.code()) {
        case EvalErrorCode::UnboundVariable: return "unbound_variable(" + quote_string(e.detail()) + ")";
        case EvalErrorCode::NonIntegerOperand: return "non_integer_operand(" + quote_string(e.detail()) + ")";
        case EvalErrorCode::ArithmeticOverflow: return "arithmetic_overflow(" + quote_string(e.detail()) + ")";
    }
    return "fault";
}

class Cycle {
public:
    Cycle(AgentState& s, StepOutcome& out) : s_(s), out_(out), cycle_(s.cycle_count) {}

    void emit(TraceKind kind, std::string payload = {})
    {
        out_.emitted.push_back(TraceEvent{s_.instance_name, cycle_, kind, std::move(payload), std::nullopt});
    }

    bool add_belief(const Term& t, std::optional<std::string> sender)
    {
        if (std::find(s_.beliefs.begin(), s_.beliefs.end(), t) != s_.beliefs.end()) return false;
        s_.beliefs.push_back(t);
        emit(TraceKind::BeliefAdd, t.canonical());
        s_.events.push_back(Event{TriggerKind::AddBelief, t, std::move(sender), {}});
        return true;
    }

    bool del_belief(const Term& t)
    {
        auto it = std::find(s_.beliefs.begin(), s_.beliefs.end(), t);
        if (it == s_.beliefs.end()) return false;
        s_.beliefs.erase(it);
        emit(TraceKind::BeliefDel, t.canonical());
        s_.events.push_back(Event{TriggerKind::DelBelief, t, {}, {}});
        return true;
    }

    void receive(std::vector<Message>& inbox)
    {
        for (auto& m : inbox) {
            const std::string content = m.content.canonical();
            emit(TraceKind::MsgRecv,
                 std::string(performative_name(m.performative)) + "(" + quote_string(m.sender) + "," + content + ")");
            if (m.performative == Performative::Tell) {
                add_belief(m.content, m.sender);
            } else {
                s_.events.push_back(Event{TriggerKind::AddGoal, std::move(m.content), m.sender, {}});
            }
        }
    }

    void handle_event()
    {
        if (s_.events.empty()) return;
        Event ev = std::move(s_.events.front());
        s_.events.pop_front();

        const auto& plans = s_.program->plans;
        std::optional<IntentionFrame> frame;
        for (std::size_t i = 0; i < plans.size() && !frame; ++i) {
            const auto& p = plans[i];
            if (p.trigger.kind != ev.kind) continue;
            auto relevant = unify(p.trigger.pattern, ev.content);
            if (!relevant) continue;
            if (auto applicable = match_context(p.context, s_.beliefs, *relevant))
                frame = IntentionFrame{i, 0, std::move(*applicable)};
        }

        if (ev.intention) {
            auto it = std::find_if(s_.intentions.begin(), s_.intentions.end(),
                                   [&](const Intention& in) { return in.id == *ev.intention; });
            if (it == s_.intentions.end()) return;
            if (frame) {
                it->frames.push_back(std::move(*frame));
                it->waiting = false;
            } else {
                // No applicable plan for the subgoal: the intention is dropped.
                remove_intention(static_cast<std::size_t>(it - s_.intentions.begin()));
            }
            return;
        }
        if (!frame) return;
        Intention in;
        in.id = s_.next_intention_id++;
        in.root = std::move(ev.content);
        in.frames.push_back(std::move(*frame));
        s_.intentions.push_back(std::move(in));
    }

    void remove_intention(std::size_t idx)
    {
        emit(TraceKind::IntentionDone, s_.intentions[idx].root.canonical());
        s_.intentions.erase(s_.intentions.begin() + static_cast<std::ptrdiff_t>(idx));
        const std::size_t n = s_.intentions.size();
        if (idx < s_.intention_cursor) --s_.intention_cursor;
        s_.intention_cursor = n == 0 ? 0 : s_.intention_cursor % n;
    }

    void run_intention()
    {
        const std::size_t n = s_.intentions.size();
        std::optional<std::size_t> chosen;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t idx = (s_.intention_cursor + k) % n;
            if (!s_.intentions[idx].waiting) {
                chosen = idx;
                break;
            }
        }
        if (!chosen) return;
        const std::size_t idx = *chosen;
        s_.intention_cursor = (idx + 1) % n;

        try {
            advance(idx);
        } catch (const StepFault& f) {
            s_.halted = true;
            s_.fault = f.payload;
            emit(TraceKind::Fault, f.payload);
        }
    }

    bool has_runnable_intention() const
    {
        return std::any_of(s_.intentions.begin(), s_.intentions.end(), [](const Intention& in) { return !in.waiting; });
    }

private:
    // Runs intention `idx` up to the next yield point.
    void advance(std::size_t idx)
    {
        const auto& plans = s_.program->plans;
        for (;;) {
            Intention& in = s_.intentions[idx];
            IntentionFrame& top = in.frames.back();
            const auto& body = plans[top.plan_index].body;
            if (top.next_step >= body.size()) {
                // Frame finished; parents whose last step was this subgoal finish too.
                in.frames.pop_back();
                while (!in.frames.empty()
                       && in.frames.back().next_step >= plans[in.frames.back().plan_index].body.size())
                    in.frames.pop_back();
                if (in.frames.empty()) remove_intention(idx);
                return;
            }
            const BodyStep& st = body[top.next_step++];
            if (execute(in, top.bindings, st)) return;
        }
    }

    Term ground(const Term& t, const Substitution& b)
    {
        try {
            return resolve(t, b);
        } catch (const EvalError& e) {
            throw StepFault{fault_payload(e)};
        }
    }

    // Returns true when the step is a yield point.
    bool execute(Intention& in, const Substitution& b, const BodyStep& st)
    {
        if (const auto* s = std::get_if<step::AddBelief>(&st)) {
            add_belief(ground(s->term, b), std::nullopt);
            return false;
        }
        if (const auto* s = std::get_if<step::DelBelief>(&st)) {
            del_belief(ground(s->term, b));
            return false;
        }
        if (const auto* s = std::get_if<step::AdoptGoal>(&st)) {
            Term goal = ground(s->goal, b);
            emit(TraceKind::GoalAdopt, goal.canonical());
            s_.events.push_back(Event{TriggerKind::AddGoal, std::move(goal), {}, in.id});
            in.waiting = true;
            return true;
        }
        if (const auto* s = std::get_if<step::Send>(&st)) {
            send(b, *s);
            return true;
        }
        if (const auto* s = std::get_if<step::Print>(&st)) {
            emit(TraceKind::Print, ground(s->term, b).canonical());
            return false;
        }
        s_.halted = true;
        emit(TraceKind::Halt);
        return true;
    }

    void send(const Substitution& b, const step::Send& s)
    {
        const Term rcv = ground(s.receiver, b);
        std::string name;
        if (rcv.is(TermKind::Atom) || rcv.is(TermKind::Str)) name = rcv.text();
        if (name.empty() || !std::binary_search(s_.roster->begin(), s_.roster->end(), name))
            throw StepFault{"unknown_receiver(" + quote_string(rcv.canonical()) + ")"};

        Message m;
        m.sender = s_.instance_name;
        m.receiver = name;
        m.performative = s.performative;
        m.content = ground(s.content, b);
        m.seq = s_.send_seq[name]++;
        emit(TraceKind::MsgSend, std::string(performative_name(m.performative)) + "(" + quote_string(name) + ","
                                     + m.content.canonical() + ")");
        out_.outbox.push_back(std::move(m));
    }

    AgentState& s_;
    StepOutcome& out_;
    std::uint64_t cycle_;
};

} // namespace

StepOutcome reasoning_cycle(AgentState& state, std::vector<Message> inbox)
{
    StepOutcome out;
    if (state.halted) {
        out.status = CycleStatus::Halted;
        return out;
    }
    Cycle cycle(state, out);
    if (inbox.empty() && state.events.empty() && !cycle.has_runnable_intention()) {
        out.status = CycleStatus::Idle;
        cycle.emit(TraceKind::CycleIdle);
        return out;
    }
    out.status = CycleStatus::Progressed;
    cycle.emit(TraceKind::CycleStart);
    cycle.receive(inbox);
    cycle.handle_event();
    cycle.run_intention();
    ++state.cycle_count;
    return out;
}

} // namespace bdiconc
