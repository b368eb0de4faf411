#pragma once

// Parameterised workloads and the model x workload benchmark matrix.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "bdiconc/model.hpp"

namespace bdiconc {

// N independent counters, each counting from 0 to K.
struct CounterFarm {
    std::uint64_t agents = 1;
    std::uint64_t target = 0;
};

// Agents ring0..ring{N-1} pass token(L) around; ring0 starts lap L+1 until
// R laps are done. Every agent receives the token once per lap.
struct TokenRing {
    std::uint64_t agents = 1;
    std::uint64_t laps = 1;
};

// N producers each send M `achieve item(I)` messages to one sink, which
// counts them in received(C).
struct FanIn {
    std::uint64_t producers = 1;
    std::uint64_t items_each = 0;
};

using Workload = std::variant<CounterFarm, TokenRing, FanIn>;

inline constexpr std::string_view kWorkloadGrammar = "counter:<N>:<K> | ring:<N>:<R> | fanin:<N>:<M>";

// Throws std::invalid_argument.
Workload parse_workload(std::string_view text);
std::string workload_name(const Workload& w);

// Spec source text; passes parse_spec and validate.
std::string render(const Workload& w);

// "all" or a comma-separated list of selectors. Throws ModelSyntaxError.
std::vector<ExecutionModel> parse_model_list(std::string_view text);

enum class Determinism : std::uint8_t { Yes, No, NotApplicable };
const char* determinism_name(Determinism d);

struct BenchRow {
    std::string model;
    std::string workload;
    std::int64_t peak_workers = 0;
    std::optional<std::int64_t> os_probe_peak;
    std::string worker_kind;
    Determinism deterministic = Determinism::NotApplicable;
    double wall_time_ms = 0;   // minimum over runs
    std::uint64_t total_cycles = 0;
    double fairness_ratio = 1.0;
    std::uint64_t messages = 0;   // messages received
    std::string termination;
    std::optional<Fingerprint> combined_fingerprint;
    std::optional<Fingerprint> interleaving_fingerprint;
    std::optional<std::string> error;

    nlohmann::json to_json() const;
};

struct BenchReport {
    std::uint64_t seed = 0;
    std::uint64_t runs = 0;
    std::vector<BenchRow> rows;

    bool any_error() const;
    nlohmann::json to_json() const;
    std::string to_text() const;
    std::string to_csv() const;
};

struct BenchOptions {
    std::uint64_t runs = 3;
    std::uint64_t seed = 0;
    std::uint64_t wall_timeout_ms = 120'000;
    std::optional<std::uint64_t> max_cycles_per_agent;
    std::string worker_executable = "/proc/self/exe";
};

// Cells run one after another. A failing cell (spawn failure, fault,
// timeout) is recorded in its row instead of aborting the matrix.
BenchReport run_matrix(const std::vector<ExecutionModel>& models, const std::vector<Workload>& workloads,
                       const BenchOptions& options);

} // namespace bdiconc
