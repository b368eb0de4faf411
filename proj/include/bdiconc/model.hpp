#pragma once

// External concurrency models and the single entry point that runs a MasSpec
// under any of them. The model is chosen per run; the spec never carries it.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "bdiconc/executor.hpp"
#include "bdiconc/message.hpp"
#include "bdiconc/spec.hpp"
#include "bdiconc/trace.hpp"

namespace bdiconc {

// One dedicated thread per agent instance.
struct OneAgentOneThread {
    friend bool operator==(const OneAgentOneThread&, const OneAgentOneThread&) = default;
};

enum class SchedulingPolicy : std::uint8_t { RoundRobin, RandomSeeded };

// Every agent on the calling thread, one cycle at a time, picked by policy.
struct AllAgentsOneThread {
    SchedulingPolicy policy = SchedulingPolicy::RoundRobin;
    std::optional<std::uint64_t> seed;   // RandomSeeded; falls back to RunConfig::seed
    friend bool operator==(const AllAgentsOneThread&, const AllAgentsOneThread&) = default;
};

// Every agent on the calling thread via a FIFO queue of cycle tasks.
struct AllAgentsOneEventLoop {
    friend bool operator==(const AllAgentsOneEventLoop&, const AllAgentsOneEventLoop&) = default;
};

struct SharedExecutorFixed {
    std::size_t workers = 1;
    friend bool operator==(const SharedExecutorFixed&, const SharedExecutorFixed&) = default;
};

struct SharedExecutorVariable {
    std::size_t min_workers = 0;
    std::size_t max_workers = 8;
    std::uint64_t idle_keepalive_ms = 50;
    friend bool operator==(const SharedExecutorVariable&, const SharedExecutorVariable&) = default;
};

// One child process per agent instance, messages routed by a supervisor.
struct OneAgentOneProcess {
    friend bool operator==(const OneAgentOneProcess&, const OneAgentOneProcess&) = default;
};

using ExecutionModel = std::variant<OneAgentOneThread, AllAgentsOneThread, AllAgentsOneEventLoop,
                                    SharedExecutorFixed, SharedExecutorVariable, OneAgentOneProcess>;

inline constexpr std::string_view kModelGrammar =
    "1a1t | aa1t[:rr|:rand[:<seed>]] | aa1el | aa1e:fixed:<n> | aa1e:var:<min>:<max>[:<keepalive_ms>] | 1a1p";

class ModelSyntaxError : public std::invalid_argument {
public:
    explicit ModelSyntaxError(const std::string& selector);
};

ExecutionModel parse_model(std::string_view selector);
std::string to_selector(const ExecutionModel& model);

// The six models with default parameters, in table order.
std::vector<ExecutionModel> all_models();

// Models in which a single worker executes every cycle: the global
// interleaving is then well defined.
bool is_single_worker(const ExecutionModel& model);

enum class TraceLevel : std::uint8_t { Full, FingerprintOnly, Off };

const char* trace_level_name(TraceLevel level);
std::optional<TraceLevel> trace_level_from_string(std::string_view s);

struct ChildProcess {
    std::string instance;
    int pid = 0;
};

struct RunConfig {
    ExecutionModel model = AllAgentsOneThread{};
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> max_cycles_per_agent;   // nullopt: unlimited
    std::uint64_t wall_timeout_ms = 60'000;
    TraceLevel trace_level = TraceLevel::FingerprintOnly;

    // 1A1P: program re-invoked as `<exe> worker --agent <name>`.
    std::string worker_executable = "/proc/self/exe";

    // Observation hooks. on_deliver runs on the receiver's worker when a
    // message is drained (concurrently under parallel models). Not
    // available under 1A1P, where delivery happens in the children.
    std::function<void(const Message&)> on_deliver;
    std::function<void(const std::vector<ChildProcess>&)> on_children_spawned;
};

struct AgentReport {
    std::string name;
    std::vector<std::string> beliefs;   // canonical text, insertion order
    Fingerprint beliefs_digest = 0;     // FNV-1a over "belief\n" lines
    std::uint64_t cycle_count = 0;
    std::optional<Fingerprint> fingerprint;
    bool halted = false;
    bool capped = false;
    std::optional<std::string> fault;

    nlohmann::json to_json() const;
};

struct Termination {
    enum class Kind : std::uint8_t { Quiescent, MaxCycles, Timeout, Fault };
    Kind kind = Kind::Quiescent;
    std::string agent;    // Fault only
    std::string reason;   // Fault only

    std::string to_string() const;
};

struct RunReport {
    std::string model;    // selector text
    std::uint64_t seed = 0;
    std::uint64_t spec_digest = 0;
    std::vector<AgentReport> agents;   // instance order
    std::optional<Fingerprint> combined_fingerprint;
    std::optional<Fingerprint> interleaving_fingerprint;
    Metrics metrics;
    Termination termination;
    // TraceLevel::Full only. Global order under single-worker models,
    // otherwise per-agent blocks in instance order.
    std::vector<TraceEvent> trace;

    nlohmann::json to_json() const;
};

class InvalidSpec : public std::invalid_argument {
public:
    explicit InvalidSpec(std::vector<ValidationError> errors);
    const std::vector<ValidationError>& errors() const { return errors_; }

private:
    std::vector<ValidationError> errors_;
};

// Blocking. Validates the spec (InvalidSpec), then executes it under
// config.model until quiescence, a cycle cap, or the wall timeout. The spec
// is only read; the same value can be run under every model.
// Throws SpawnFailure when the platform refuses a thread or process.
RunReport run(const MasSpec& spec, const RunConfig& config);

} // namespace bdiconc
