#pragma once

// Declarative MAS specification: the immutable program every execution
// model consumes unchanged. Nothing in this header (or anything it includes)
// knows about execution models; tests/architecture_test.cpp checks that.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bdiconc/term.hpp"

namespace bdiconc {

enum class TriggerKind : std::uint8_t { AddBelief, DelBelief, AddGoal };

const char* trigger_kind_name(TriggerKind k);

struct Trigger {
    TriggerKind kind = TriggerKind::AddGoal;
    Term pattern;

    friend bool operator==(const Trigger&, const Trigger&) = default;
};

enum class CompareOp : std::uint8_t { Lt, Le, Gt, Ge, Eq, Ne };

const char* compare_op_symbol(CompareOp op);

struct BeliefTest {
    Term pattern;
    friend bool operator==(const BeliefTest&, const BeliefTest&) = default;
};

// lhs/rhs are expressions: Int, Var, or Arith nodes over them.
struct Compare {
    CompareOp op = CompareOp::Eq;
    Term lhs;
    Term rhs;
    friend bool operator==(const Compare&, const Compare&) = default;
};

using Condition = std::variant<BeliefTest, Compare>;

enum class Performative : std::uint8_t { Tell, Achieve };

const char* performative_name(Performative p);
std::optional<Performative> performative_from_string(std::string_view s);

namespace step {

struct AddBelief { Term term; friend bool operator==(const AddBelief&, const AddBelief&) = default; };
struct DelBelief { Term term; friend bool operator==(const DelBelief&, const DelBelief&) = default; };
struct AdoptGoal { Term goal; friend bool operator==(const AdoptGoal&, const AdoptGoal&) = default; };
// receiver is an Atom naming an agent, or a Var bound at runtime.
struct Send {
    Term receiver;
    Performative performative = Performative::Tell;
    Term content;
    friend bool operator==(const Send&, const Send&) = default;
};
struct Print { Term term; friend bool operator==(const Print&, const Print&) = default; };
struct Halt { friend bool operator==(const Halt&, const Halt&) = default; };

} // namespace step

using BodyStep = std::variant<step::AddBelief, step::DelBelief, step::AdoptGoal,
                              step::Send, step::Print, step::Halt>;

struct PlanDef {
    Trigger trigger;
    std::vector<Condition> context;
    std::vector<BodyStep> body;
    std::size_t declaration_index = 0;

    friend bool operator==(const PlanDef&, const PlanDef&) = default;
};

struct AgentDef {
    std::string name;
    std::int64_t replicas = 1;
    std::vector<Term> initial_beliefs;
    std::vector<Term> initial_goals;
    std::vector<PlanDef> plans;

    friend bool operator==(const AgentDef&, const AgentDef&) = default;
};

// Immutable once built. The agent list is shared, so copies are cheap and
// every copy observes the same program.
class MasSpec {
public:
    MasSpec();
    explicit MasSpec(std::vector<AgentDef> agents);

    const std::vector<AgentDef>& agents() const { return *agents_; }
    // FNV-1a/64 of the canonical serialization.
    std::uint64_t source_digest() const { return digest_; }

    const AgentDef* find(std::string_view name) const;
    // Owning handle to one of this spec's agents (shares the spec's storage).
    std::shared_ptr<const AgentDef> share(const AgentDef& agent) const;

    friend bool operator==(const MasSpec& a, const MasSpec& b);

private:
    std::shared_ptr<const std::vector<AgentDef>> agents_;
    std::uint64_t digest_ = 0;
};

// Canonical source text. parse_spec(serialize(s)) == s for any parsed s.
std::string serialize(const MasSpec& spec);
std::string serialize(const AgentDef& agent);
std::string serialize(const PlanDef& plan);
std::string serialize(const Condition& cond);
std::string serialize(const BodyStep& step);

enum class ValidationCode : std::uint8_t {
    DuplicateAgentName,
    InvalidReplicas,
    NonGroundBelief,
    NonGroundGoal,
    InvalidTrigger,
    UnboundVariable,
    UnknownReceiver,
    AmbiguousReceiver,
    InvalidInitialTerm,
};

const char* validation_code_name(ValidationCode code);

struct ValidationError {
    ValidationCode code;
    std::string agent;
    std::optional<std::size_t> plan_index;
    std::string detail;

    std::string to_string() const;
    friend bool operator==(const ValidationError&, const ValidationError&) = default;
};

// Returns every problem found, in agent/plan order; empty means valid.
std::vector<ValidationError> validate(const MasSpec& spec);

struct AgentInstance {
    std::string instance_name;
    const AgentDef* def = nullptr;
};

// `name` for replicas == 1, otherwise `name#0` .. `name#k-1`; spec order,
// then replica index. Pointers refer into spec.agents().
std::vector<AgentInstance> expand_instances(const MasSpec& spec);

} // namespace bdiconc
