#include "bdiconc/model.hpp"

#include <charconv>
#include <limits>

#include "runtime/driver.hpp"

namespace bdiconc {

namespace {

std::vector<std::string_view> split_colon(std::string_view s)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(':', start);
        parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::optional<std::uint64_t> parse_u64(std::string_view s)
{
    if (s.empty()) return std::nullopt;
    if (s.size() > 1 && s[0] == '0') return std::nullopt;
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

} // namespace

ModelSyntaxError::ModelSyntaxError(const std::string& selector)
    : std::invalid_argument("invalid model selector '" + selector + "'; expected " + std::string(kModelGrammar))
{
}

ExecutionModel parse_model(std::string_view selector)
{
    const auto fail = [&]() -> ModelSyntaxError { return ModelSyntaxError(std::string(selector)); };
    const auto parts = split_colon(selector);
    const auto& head = parts[0];

    if (head == "1a1t" && parts.size() == 1) return OneAgentOneThread{};
    if (head == "1a1p" && parts.size() == 1) return OneAgentOneProcess{};
    if (head == "aa1el" && parts.size() == 1) return AllAgentsOneEventLoop{};

    if (head == "aa1t") {
        if (parts.size() == 1) return AllAgentsOneThread{};
        if (parts[1] == "rr" && parts.size() == 2) return AllAgentsOneThread{};
        if (parts[1] == "rand" && parts.size() <= 3) {
            AllAgentsOneThread m{SchedulingPolicy::RandomSeeded, std::nullopt};
            if (parts.size() == 3) {
                m.seed = parse_u64(parts[2]);
                if (!m.seed) throw fail();
            }
            return m;
        }
        throw fail();
    }

    if (head == "aa1e" && parts.size() >= 2) {
        if (parts[1] == "fixed" && parts.size() == 3) {
            const auto n = parse_u64(parts[2]);
            if (!n || *n == 0 || *n > std::numeric_limits<std::uint32_t>::max()) throw fail();
            return SharedExecutorFixed{static_cast<std::size_t>(*n)};
        }
        if (parts[1] == "var" && (parts.size() == 4 || parts.size() == 5)) {
            const auto lo = parse_u64(parts[2]);
            const auto hi = parse_u64(parts[3]);
            if (!lo || !hi || *hi == 0 || *lo > *hi || *hi > std::numeric_limits<std::uint32_t>::max()) throw fail();
            SharedExecutorVariable m{static_cast<std::size_t>(*lo), static_cast<std::size_t>(*hi), 50};
            if (parts.size() == 5) {
                const auto ka = parse_u64(parts[4]);
                if (!ka || *ka == 0) throw fail();
                m.idle_keepalive_ms = *ka;
            }
            return m;
        }
    }
    throw fail();
}

std::string to_selector(const ExecutionModel& model)
{
    struct Writer {
        std::string operator()(const OneAgentOneThread&) const { return "1a1t"; }
        std::string operator()(const AllAgentsOneThread& m) const
        {
            if (m.policy == SchedulingPolicy::RoundRobin) return "aa1t:rr";
            return m.seed ? "aa1t:rand:" + std::to_string(*m.seed) : "aa1t:rand";
        }
        std::string operator()(const AllAgentsOneEventLoop&) const { return "aa1el"; }
        std::string operator()(const SharedExecutorFixed& m) const { return "aa1e:fixed:" + std::to_string(m.workers); }
        std::string operator()(const SharedExecutorVariable& m) const
        {
            return "aa1e:var:" + std::to_string(m.min_workers) + ":" + std::to_string(m.max_workers) + ":"
                + std::to_string(m.idle_keepalive_ms);
        }
        std::string operator()(const OneAgentOneProcess&) const { return "1a1p"; }
    };
    return std::visit(Writer{}, model);
}

std::vector<ExecutionModel> all_models()
{
    return {OneAgentOneThread{},
            AllAgentsOneThread{},
            AllAgentsOneEventLoop{},
            SharedExecutorFixed{1},
            SharedExecutorVariable{0, 8, 50},
            OneAgentOneProcess{}};
}

bool is_single_worker(const ExecutionModel& model)
{
    if (std::holds_alternative<AllAgentsOneThread>(model)) return true;
    if (std::holds_alternative<AllAgentsOneEventLoop>(model)) return true;
    if (const auto* f = std::get_if<SharedExecutorFixed>(&model)) return f->workers == 1;
    return false;
}

const char* trace_level_name(TraceLevel level)
{
    switch (level) {
        case TraceLevel::Full: return "full";
        case TraceLevel::FingerprintOnly: return "fingerprint";
        case TraceLevel::Off: return "off";
    }
    return "?";
}

std::optional<TraceLevel> trace_level_from_string(std::string_view s)
{
    if (s == "full") return TraceLevel::Full;
    if (s == "fingerprint" || s == "fingerprint-only") return TraceLevel::FingerprintOnly;
    if (s == "off") return TraceLevel::Off;
    return std::nullopt;
}

nlohmann::json AgentReport::to_json() const
{
    nlohmann::json j;
    j["name"] = name;
    j["beliefs"] = beliefs;
    j["beliefs_digest"] = format_fingerprint(beliefs_digest);
    j["cycle_count"] = cycle_count;
    j["fingerprint"] = fingerprint ? nlohmann::json(format_fingerprint(*fingerprint)) : nlohmann::json(nullptr);
    j["halted"] = halted;
    j["capped"] = capped;
    j["fault"] = fault ? nlohmann::json(*fault) : nlohmann::json(nullptr);
    return j;
}

std::string Termination::to_string() const
{
    switch (kind) {
        case Kind::Quiescent: return "quiescent";
        case Kind::MaxCycles: return "max_cycles";
        case Kind::Timeout: return "timeout";
        case Kind::Fault: return "fault(" + agent + ", " + reason + ")";
    }
    return "?";
}

nlohmann::json RunReport::to_json() const
{
    nlohmann::json j;
    j["model"] = model;
    j["seed"] = seed;
    j["spec_digest"] = format_fingerprint(spec_digest);
    nlohmann::json term;
    switch (termination.kind) {
        case Termination::Kind::Quiescent: term["kind"] = "quiescent"; break;
        case Termination::Kind::MaxCycles: term["kind"] = "max_cycles"; break;
        case Termination::Kind::Timeout: term["kind"] = "timeout"; break;
        case Termination::Kind::Fault:
            term["kind"] = "fault";
            term["agent"] = termination.agent;
            term["reason"] = termination.reason;
            break;
    }
    j["termination"] = term;
    j["combined_fingerprint"] =
        combined_fingerprint ? nlohmann::json(format_fingerprint(*combined_fingerprint)) : nlohmann::json(nullptr);
    j["interleaving_fingerprint"] = interleaving_fingerprint
        ? nlohmann::json(format_fingerprint(*interleaving_fingerprint))
        : nlohmann::json(nullptr);
    j["metrics"] = metrics.to_json();
    j["agents"] = nlohmann::json::array();
    for (const auto& a : agents) j["agents"].push_back(a.to_json());
    return j;
}

namespace {

std::string join_errors(const std::vector<ValidationError>& errors)
{
    std::string out = "invalid spec:";
    for (const auto& e : errors) out += "\n  " + e.to_string();
    return out;
}

} // namespace

InvalidSpec::InvalidSpec(std::vector<ValidationError> errors)
    : std::invalid_argument(join_errors(errors))
    , errors_(std::move(errors))
{
}

RunReport run(const MasSpec& spec, const RunConfig& config)
{
    if (auto errors = validate(spec); !errors.empty()) throw InvalidSpec(std::move(errors));

    const auto start = detail::Clock::now();
    RunReport report;
    if (std::holds_alternative<OneAgentOneProcess>(config.model)) {
        report = detail::run_one_agent_one_process(spec, config);
    } else {
        detail::Driver driver(spec, config, is_single_worker(config.model));
        report = std::visit(
            [&](const auto& m) -> RunReport {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, OneAgentOneThread>) {
                    return detail::run_one_agent_one_thread(driver, config);
                } else if constexpr (std::is_same_v<M, AllAgentsOneThread>) {
                    return detail::run_all_agents_one_thread(driver, config, m);
                } else if constexpr (std::is_same_v<M, AllAgentsOneEventLoop>) {
                    return detail::run_event_loop(driver, config);
                } else if constexpr (std::is_same_v<M, SharedExecutorFixed>) {
                    return detail::run_shared_executor(driver, config, PoolSpec{m.workers, m.workers});
                } else if constexpr (std::is_same_v<M, SharedExecutorVariable>) {
                    return detail::run_shared_executor(
                        driver, config,
                        PoolSpec{m.min_workers, m.max_workers, std::chrono::milliseconds(m.idle_keepalive_ms)});
                } else {
                    return {};
                }
            },
            config.model);
    }
    report.metrics.wall_time_ms = detail::wall_ms_since(start);
    report.model = to_selector(config.model);
    report.seed = config.seed;
    report.spec_digest = spec.source_digest();
    return report;
}

} // namespace bdiconc
