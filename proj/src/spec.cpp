#include "bdiconc/spec.hpp"

#include <map>
#include <set>
#include <sstream>

#include "bdiconc/fnv.hpp"

namespace bdiconc {

const char* trigger_kind_name(TriggerKind k)
{
    switch (k) {
        case TriggerKind::AddBelief: return "AddBelief";
        case TriggerKind::DelBelief: return "DelBelief";
        case TriggerKind::AddGoal: return "AddGoal";
    }
    return "?";
}

const char* compare_op_symbol(CompareOp op)
{
    switch (op) {
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ge: return ">=";
        case CompareOp::Eq: return "==";
        case CompareOp::Ne: return "!=";
    }
    return "?";
}

const char* performative_name(Performative p)
{
    return p == Performative::Tell ? "tell" : "achieve";
}

std::optional<Performative> performative_from_string(std::string_view s)
{
    if (s == "tell") return Performative::Tell;
    if (s == "achieve") return Performative::Achieve;
    return std::nullopt;
}

MasSpec::MasSpec() : MasSpec(std::vector<AgentDef>{}) {}

MasSpec::MasSpec(std::vector<AgentDef> agents)
    : agents_(std::make_shared<const std::vector<AgentDef>>(std::move(agents)))
{
    digest_ = fnv1a64(serialize(*this));
}

const AgentDef* MasSpec::find(std::string_view name) const
{
    for (const auto& a : *agents_)
        if (a.name == name) return &a;
    return nullptr;
}

std::shared_ptr<const AgentDef> MasSpec::share(const AgentDef& agent) const
{
    return std::shared_ptr<const AgentDef>(agents_, &agent);
}

bool operator==(const MasSpec& a, const MasSpec& b)
{
    return a.digest_ == b.digest_ && *a.agents_ == *b.agents_;
}

// --- serialization -------------------------------------------------------

namespace {

std::string trigger_text(const Trigger& t)
{
    switch (t.kind) {
        case TriggerKind::AddBelief: return "+" + t.pattern.canonical();
        case TriggerKind::DelBelief: return "-" + t.pattern.canonical();
        case TriggerKind::AddGoal: return "+!" + t.pattern.canonical();
    }
    return {};
}

struct StepWriter {
    std::string operator()(const step::AddBelief& s) const { return "+" + s.term.canonical(); }
    std::string operator()(const step::DelBelief& s) const { return "-" + s.term.canonical(); }
    std::string operator()(const step::AdoptGoal& s) const { return "!" + s.goal.canonical(); }
    std::string operator()(const step::Send& s) const
    {
        return ".send(" + s.receiver.canonical() + "," + performative_name(s.performative) + ","
            + s.content.canonical() + ")";
    }
    std::string operator()(const step::Print& s) const { return ".print(" + s.term.canonical() + ")"; }
    std::string operator()(const step::Halt&) const { return ".halt"; }
};

} // namespace

std::string serialize(const Condition& cond)
{
    if (const auto* bt = std::get_if<BeliefTest>(&cond)) return bt->pattern.canonical();
    const auto& c = std::get<Compare>(cond);
    return c.lhs.canonical() + " " + compare_op_symbol(c.op) + " " + c.rhs.canonical();
}

std::string serialize(const BodyStep& s)
{
    return std::visit(StepWriter{}, s);
}

std::string serialize(const PlanDef& plan)
{
    std::string out = "plan " + trigger_text(plan.trigger);
    for (std::size_t i = 0; i < plan.context.size(); ++i) {
        out += i == 0 ? " : " : " & ";
        out += serialize(plan.context[i]);
    }
    out += " <-";
    for (std::size_t i = 0; i < plan.body.size(); ++i) {
        out += i == 0 ? " " : "; ";
        out += serialize(plan.body[i]);
    }
    out += ".";
    return out;
}

std::string serialize(const AgentDef& agent)
{
    std::string out = "agent " + agent.name;
    if (agent.replicas != 1) out += "*" + std::to_string(agent.replicas);
    out += " {\n";
    for (const auto& b : agent.initial_beliefs) out += "    belief " + b.canonical() + ".\n";
    for (const auto& g : agent.initial_goals) out += "    goal !" + g.canonical() + ".\n";
    for (const auto& p : agent.plans) out += "    " + serialize(p) + "\n";
    out += "}\n";
    return out;
}

std::string serialize(const MasSpec& spec)
{
    std::string out;
    for (std::size_t i = 0; i < spec.agents().size(); ++i) {
        if (i) out += "\n";
        out += serialize(spec.agents()[i]);
    }
    return out;
}

// --- validation ----------------------------------------------------------

const char* validation_code_name(ValidationCode code)
{
    switch (code) {
        case ValidationCode::DuplicateAgentName: return "DuplicateAgentName";
        case ValidationCode::InvalidReplicas: return "InvalidReplicas";
        case ValidationCode::NonGroundBelief: return "NonGroundBelief";
        case ValidationCode::NonGroundGoal: return "NonGroundGoal";
        case ValidationCode::InvalidTrigger: return "InvalidTrigger";
        case ValidationCode::UnboundVariable: return "UnboundVariable";
        case ValidationCode::UnknownReceiver: return "UnknownReceiver";
        case ValidationCode::AmbiguousReceiver: return "AmbiguousReceiver";
        case ValidationCode::InvalidInitialTerm: return "InvalidInitialTerm";
    }
    return "?";
}

std::string ValidationError::to_string() const
{
    std::ostringstream os;
    os << "agent '" << agent << "'";
    if (plan_index) os << " plan " << *plan_index;
    os << ": " << validation_code_name(code);
    if (!detail.empty()) os << " (" << detail << ")";
    return os.str();
}

namespace {

bool contains_arith(const Term& t)
{
    if (t.is(TermKind::Arith)) return true;
    for (const auto& a : t.args())
        if (contains_arith(a)) return true;
    return false;
}

std::set<std::string> vars_of(const Term& t)
{
    std::set<std::string> out;
    t.collect_vars(out);
    return out;
}

void check_initial(const AgentDef& a, std::vector<ValidationError>& errors)
{
    for (const auto& b : a.initial_beliefs) {
        if (!b.is_ground())
            errors.push_back({ValidationCode::NonGroundBelief, a.name, std::nullopt, b.canonical()});
        else if (contains_arith(b))
            errors.push_back({ValidationCode::InvalidInitialTerm, a.name, std::nullopt, b.canonical()});
    }
    for (const auto& g : a.initial_goals) {
        if (!g.is_ground())
            errors.push_back({ValidationCode::NonGroundGoal, a.name, std::nullopt, g.canonical()});
        else if (contains_arith(g) || !g.is_callable())
            errors.push_back({ValidationCode::InvalidInitialTerm, a.name, std::nullopt, g.canonical()});
    }
}

void check_plan(const MasSpec& spec, const AgentDef& a, const PlanDef& p, std::vector<ValidationError>& errors)
{
    auto report = [&](ValidationCode code, std::string detail) {
        errors.push_back({code, a.name, p.declaration_index, std::move(detail)});
    };

    if (!p.trigger.pattern.is_callable() || contains_arith(p.trigger.pattern))
        report(ValidationCode::InvalidTrigger, p.trigger.pattern.canonical());

    std::set<std::string> bound = vars_of(p.trigger.pattern);
    bound.erase("_");
    std::set<std::string> reported;
    auto require = [&](const std::set<std::string>& used) {
        for (const auto& v : used) {
            if (!bound.count(v) && reported.insert(v).second) report(ValidationCode::UnboundVariable, v);
        }
    };

    for (const auto& c : p.context) {
        if (const auto* bt = std::get_if<BeliefTest>(&c)) {
            auto vs = vars_of(bt->pattern);
            vs.erase("_");
            bound.insert(vs.begin(), vs.end());
        } else {
            const auto& cmp = std::get<Compare>(c);
            auto vs = vars_of(cmp.lhs);
            auto rhs = vars_of(cmp.rhs);
            vs.insert(rhs.begin(), rhs.end());
            require(vs);
        }
    }

    for (const auto& s : p.body) {
        std::visit(
            [&](const auto& st) {
                using S = std::decay_t<decltype(st)>;
                if constexpr (std::is_same_v<S, step::AddBelief> || std::is_same_v<S, step::DelBelief>) {
                    require(vars_of(st.term));
                } else if constexpr (std::is_same_v<S, step::AdoptGoal>) {
                    require(vars_of(st.goal));
                } else if constexpr (std::is_same_v<S, step::Print>) {
                    require(vars_of(st.term));
                } else if constexpr (std::is_same_v<S, step::Send>) {
                    require(vars_of(st.receiver));
                    require(vars_of(st.content));
                    if (st.receiver.is(TermKind::Atom)) {
                        const AgentDef* target = spec.find(st.receiver.text());
                        if (!target) report(ValidationCode::UnknownReceiver, st.receiver.text());
                        else if (target->replicas != 1) report(ValidationCode::AmbiguousReceiver, st.receiver.text());
                    } else if (!st.receiver.is(TermKind::Var)) {
                        report(ValidationCode::UnknownReceiver, st.receiver.canonical());
                    }
                }
            },
            s);
    }
}

} // namespace

std::vector<ValidationError> validate(const MasSpec& spec)
{
    std::vector<ValidationError> errors;
    std::set<std::string> seen;
    for (const auto& a : spec.agents()) {
        if (!seen.insert(a.name).second)
            errors.push_back({ValidationCode::DuplicateAgentName, a.name, std::nullopt, a.name});
        if (a.replicas < 1)
            errors.push_back({ValidationCode::InvalidReplicas, a.name, std::nullopt, std::to_string(a.replicas)});
        check_initial(a, errors);
        for (const auto& p : a.plans) check_plan(spec, a, p, errors);
    }
    return errors;
}

std::vector<AgentInstance> expand_instances(const MasSpec& spec)
{
    std::vector<AgentInstance> out;
    for (const auto& a : spec.agents()) {
        if (a.replicas == 1) {
            out.push_back({a.name, &a});
            continue;
        }
        for (std::int64_t i = 0; i < a.replicas; ++i) out.push_back({a.name + "#" + std::to_string(i), &a});
    }
    return out;
}

} // namespace bdiconc
