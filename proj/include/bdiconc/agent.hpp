#pragma once

// The per-agent reasoning cycle. Everything here is single-threaded and
// pure: a cycle reads only the AgentState and the inbox handed to it, so
// every execution model drives identical agent semantics.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdiconc/message.hpp"
#include "bdiconc/spec.hpp"
#include "bdiconc/term.hpp"
#include "bdiconc/trace.hpp"

namespace bdiconc {

enum class EvalErrorCode : std::uint8_t { UnboundVariable, NonIntegerOperand, ArithmeticOverflow };

class EvalError : public std::runtime_error {
public:
    EvalError(EvalErrorCode code, std::string detail);
    EvalErrorCode code() const { return code_; }
    const std::string& detail() const { return detail_; }

private:
    EvalErrorCode code_;
    std::string detail_;
};

// First-order matching of `pattern` against a resolved term, extending
// `bindings`. Arithmetic sub-patterns match when they evaluate (under the
// bindings so far) to the ground integer. `_` matches anything, binds nothing.
std::optional<Substitution> unify(const Term& pattern, const Term& ground, Substitution bindings = {});

// Checked 64-bit evaluation of Int / Var / Arith expressions.
std::int64_t eval_expr(const Term& expr, const Substitution& bindings);

// Substitute bindings and evaluate arithmetic; the result is resolved.
Term resolve(const Term& t, const Substitution& bindings);

bool eval_compare(const Compare& c, const Substitution& bindings);

// First satisfying substitution: conditions left to right, candidate beliefs
// in insertion order, backtracking when a comparison fails. Comparisons whose
// operands do not evaluate count as false.
std::optional<Substitution> match_context(std::span<const Condition> conds, std::span<const Term> beliefs,
                                          const Substitution& initial = {});

struct Event {
    TriggerKind kind = TriggerKind::AddGoal;
    Term content;                            // resolved
    std::optional<std::string> sender;       // set when the event came from a message
    std::optional<std::uint64_t> intention;  // subgoal of this intention

    friend bool operator==(const Event&, const Event&) = default;
};

struct IntentionFrame {
    std::size_t plan_index = 0;
    std::size_t next_step = 0;   // remaining body = body[next_step..]
    Substitution bindings;

    friend bool operator==(const IntentionFrame&, const IntentionFrame&) = default;
};

struct Intention {
    std::uint64_t id = 0;
    std::vector<IntentionFrame> frames;   // back() is the top of the stack
    Term root;                            // content of the event that created it
    bool waiting = false;                 // subgoal event pending

    friend bool operator==(const Intention&, const Intention&) = default;
};

using Roster = std::vector<std::string>;   // sorted instance names

struct AgentState {
    std::string instance_name;
    std::shared_ptr<const AgentDef> program;
    std::shared_ptr<const Roster> roster;

    std::vector<Term> beliefs;              // insertion ordered, no duplicates
    std::deque<Event> events;
    std::vector<Intention> intentions;
    std::size_t intention_cursor = 0;
    std::uint64_t cycle_count = 0;
    bool halted = false;
    std::optional<std::string> fault;

    std::uint64_t next_intention_id = 0;
    std::map<std::string, std::uint64_t> send_seq;   // per receiver

    friend bool operator==(const AgentState& a, const AgentState& b);
};

// Initial beliefs (deduplicated) and one untied AddGoal event per initial goal.
AgentState make_agent_state(std::string instance_name, std::shared_ptr<const AgentDef> program,
                            std::shared_ptr<const Roster> roster);

enum class CycleStatus : std::uint8_t { Progressed, Idle, Halted };

struct StepOutcome {
    CycleStatus status = CycleStatus::Idle;
    std::vector<TraceEvent> emitted;
    std::vector<Message> outbox;

    friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

// One reasoning cycle:
//  1. inbox messages become events (tell updates the belief base first);
//  2. the oldest event selects the first applicable plan by declaration
//     order and starts (or, for a subgoal, extends) an intention;
//  3. one runnable intention, chosen round-robin, runs until it adopts a
//     subgoal, sends, halts, or finishes its current frame.
// Faults (evaluation errors, unknown receivers) halt this agent and are
// recorded as a Fault trace event.
StepOutcome reasoning_cycle(AgentState& state, std::vector<Message> inbox);

bool is_quiescent(const AgentState& state, bool inbox_empty);

} // namespace bdiconc
