#include "bdiconc/bench.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <sstream>

#include "bdiconc/parser.hpp"

namespace bdiconc {

namespace {

std::optional<std::uint64_t> parse_u64(std::string_view s)
{
    if (s.empty()) return std::nullopt;
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

// Keeps rendered literals comfortably inside the int64 term range.
constexpr std::uint64_t kMaxParam = 1'000'000'000;

} // namespace

Workload parse_workload(std::string_view text)
{
    auto bad = [&] {
        return std::invalid_argument("invalid workload '" + std::string(text) + "'; expected "
                                     + std::string(kWorkloadGrammar));
    };
    const auto c1 = text.find(':');
    if (c1 == std::string_view::npos) throw bad();
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw bad();
    const auto kind = text.substr(0, c1);
    const auto a = parse_u64(text.substr(c1 + 1, c2 - c1 - 1));
    const auto b = parse_u64(text.substr(c2 + 1));
    if (!a || !b || *a == 0 || *a > kMaxParam || *b > kMaxParam) throw bad();
    if (kind == "counter") return CounterFarm{*a, *b};
    if (kind == "ring" && *b > 0) return TokenRing{*a, *b};
    if (kind == "fanin") return FanIn{*a, *b};
    throw bad();
}

std::string workload_name(const Workload& w)
{
    if (const auto* c = std::get_if<CounterFarm>(&w))
        return "counter:" + std::to_string(c->agents) + ":" + std::to_string(c->target);
    if (const auto* r = std::get_if<TokenRing>(&w))
        return "ring:" + std::to_string(r->agents) + ":" + std::to_string(r->laps);
    const auto& f = std::get<FanIn>(w);
    return "fanin:" + std::to_string(f.producers) + ":" + std::to_string(f.items_each);
}

std::string render(const Workload& w)
{
    std::ostringstream os;
    auto replicas = [](std::uint64_t n) { return n == 1 ? std::string() : "*" + std::to_string(n); };

    if (const auto* c = std::get_if<CounterFarm>(&w)) {
        os << "agent counter" << replicas(c->agents) << " {\n"
           << "    belief x(0).\n"
           << "    goal !tick.\n"
           << "    plan +!tick : x(N) & N < " << c->target << " <- -x(N); +x(N+1); !tick.\n"
           << "}\n";
    } else if (const auto* r = std::get_if<TokenRing>(&w)) {
        for (std::uint64_t i = 0; i < r->agents; ++i) {
            const std::string next = "ring" + std::to_string((i + 1) % r->agents);
            if (i) os << "\n";
            os << "agent ring" << i << " {\n";
            if (i == 0) {
                os << "    goal !start.\n"
                   << "    plan +!start <- .send(" << next << ", tell, token(1)).\n"
                   << "    plan +token(L) : L < " << r->laps << " <- -token(L); .send(" << next
                   << ", tell, token(L+1)).\n"
                   << "    plan +token(L) : L >= " << r->laps << " <- -token(L).\n";
            } else {
                os << "    plan +token(L) <- -token(L); .send(" << next << ", tell, token(L)).\n";
            }
            os << "}\n";
        }
    } else {
        const auto& f = std::get<FanIn>(w);
        os << "agent producer" << replicas(f.producers) << " {\n"
           << "    belief count(0).\n"
           << "    goal !produce.\n"
           << "    plan +!produce : count(I) & I < " << f.items_each
           << " <- -count(I); +count(I+1); .send(sink, achieve, item(I)); !produce.\n"
           << "}\n"
           << "\n"
           << "agent sink {\n"
           << "    belief received(0).\n"
           << "    plan +!item(I) : received(C) <- -received(C); +received(C+1).\n"
           << "}\n";
    }
    return os.str();
}

std::vector<ExecutionModel> parse_model_list(std::string_view text)
{
    if (text == "all") return all_models();
    std::vector<ExecutionModel> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        out.push_back(parse_model(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

const char* determinism_name(Determinism d)
{
    switch (d) {
        case Determinism::Yes: return "yes";
        case Determinism::No: return "no";
        case Determinism::NotApplicable: return "n/a";
    }
    return "?";
}

nlohmann::json BenchRow::to_json() const
{
    auto fp = [](const std::optional<Fingerprint>& f) {
        return f ? nlohmann::json(format_fingerprint(*f)) : nlohmann::json(nullptr);
    };
    nlohmann::json j;
    j["model"] = model;
    j["workload"] = workload;
    j["worker_kind"] = worker_kind;
    j["peak_workers"] = peak_workers;
    j["os_probe_peak"] = os_probe_peak ? nlohmann::json(*os_probe_peak) : nlohmann::json(nullptr);
    j["deterministic"] = determinism_name(deterministic);
    j["wall_time_ms"] = wall_time_ms;
    j["total_cycles"] = total_cycles;
    j["fairness_ratio"] = fairness_ratio;
    j["messages"] = messages;
    j["termination"] = termination;
    j["combined_fingerprint"] = fp(combined_fingerprint);
    j["interleaving_fingerprint"] = fp(interleaving_fingerprint);
    j["error"] = error ? nlohmann::json(*error) : nlohmann::json(nullptr);
    return j;
}

bool BenchReport::any_error() const
{
    return std::any_of(rows.begin(), rows.end(), [](const BenchRow& r) { return r.error.has_value(); });
}

nlohmann::json BenchReport::to_json() const
{
    nlohmann::json j;
    j["seed"] = seed;
    j["runs"] = runs;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) j["rows"].push_back(r.to_json());
    return j;
}

namespace {

std::string fixed(double v, int digits)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

std::vector<std::string> row_cells(const BenchRow& r)
{
    return {r.model,
            r.workload,
            std::to_string(r.peak_workers),
            r.os_probe_peak ? std::to_string(*r.os_probe_peak) : "-",
            determinism_name(r.deterministic),
            fixed(r.wall_time_ms, 2),
            std::to_string(r.total_cycles),
            fixed(r.fairness_ratio, 3),
            std::to_string(r.messages),
            r.error ? "error: " + *r.error : r.termination};
}

const std::vector<std::string> kColumns = {"model",        "workload", "peak_workers", "os_probe",
                                           "deterministic", "wall_ms",  "total_cycles", "fairness",
                                           "messages",     "status"};

} // namespace

std::string BenchReport::to_text() const
{
    std::vector<std::vector<std::string>> table = {kColumns};
    for (const auto& r : rows) table.push_back(row_cells(r));
    std::vector<std::size_t> width(kColumns.size(), 0);
    for (const auto& row : table)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

    std::ostringstream os;
    os << "# seed " << seed << ", runs " << runs << "\n";
    for (std::size_t k = 0; k < table.size(); ++k) {
        const auto& row = table[k];
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) os << "  ";
            // Text columns left-aligned, numbers right-aligned.
            const bool left = c < 2 || c == 4 || c + 1 == row.size();
            if (left)
                os << std::left << std::setw(static_cast<int>(c + 1 == row.size() ? 0 : width[c])) << row[c];
            else
                os << std::right << std::setw(static_cast<int>(width[c])) << row[c];
        }
        os << "\n";
        if (k == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w + 2;
            os << std::string(total - 2, '-') << "\n";
        }
    }
    return os.str();
}

std::string BenchReport::to_csv() const
{
    std::ostringstream os;
    for (std::size_t c = 0; c < kColumns.size(); ++c) os << (c ? "," : "") << kColumns[c];
    os << "\n";
    for (const auto& r : rows) {
        const auto cells = row_cells(r);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) os << ",";
            const auto& cell = cells[c];
            if (cell.find_first_of(",\"\n") != std::string::npos) {
                os << '"';
                for (char ch : cell) {
                    if (ch == '"') os << '"';
                    os << ch;
                }
                os << '"';
            } else {
                os << cell;
            }
        }
        os << "\n";
    }
    return os.str();
}

BenchReport run_matrix(const std::vector<ExecutionModel>& models, const std::vector<Workload>& workloads,
                       const BenchOptions& options)
{
    if (options.runs == 0) throw std::invalid_argument("runs must be positive");
    BenchReport report;
    report.seed = options.seed;
    report.runs = options.runs;

    for (const auto& w : workloads) {
        const MasSpec spec = parse_spec(render(w));
        for (const auto& model : models) {
            BenchRow row;
            row.model = to_selector(model);
            row.workload = workload_name(w);
            RunConfig cfg;
            cfg.model = model;
            cfg.seed = options.seed;
            cfg.max_cycles_per_agent = options.max_cycles_per_agent;
            cfg.wall_timeout_ms = options.wall_timeout_ms;
            cfg.trace_level = TraceLevel::FingerprintOnly;
            cfg.worker_executable = options.worker_executable;

            bool same = true;
            for (std::uint64_t k = 0; k < options.runs; ++k) {
                RunReport rr;
                try {
                    rr = run(spec, cfg);
                } catch (const std::exception& e) {
                    row.error = e.what();
                    break;
                }
                if (k == 0) {
                    row.peak_workers = rr.metrics.peak_workers;
                    row.os_probe_peak = rr.metrics.os_probe_peak;
                    row.worker_kind = rr.metrics.worker_kind;
                    row.wall_time_ms = rr.metrics.wall_time_ms;
                    for (const auto& [name, cycles] : rr.metrics.per_agent_cycles) row.total_cycles += cycles;
                    row.fairness_ratio = rr.metrics.fairness_ratio;
                    row.messages = rr.metrics.messages_received;
                    row.termination = rr.termination.to_string();
                    row.combined_fingerprint = rr.combined_fingerprint;
                    row.interleaving_fingerprint = rr.interleaving_fingerprint;
                } else {
                    row.wall_time_ms = std::min(row.wall_time_ms, rr.metrics.wall_time_ms);
                    row.peak_workers = std::max(row.peak_workers, rr.metrics.peak_workers);
                    if (rr.combined_fingerprint != row.combined_fingerprint
                        || rr.interleaving_fingerprint != row.interleaving_fingerprint)
                        same = false;
                }
                if (rr.termination.kind != Termination::Kind::Quiescent) {
                    row.error = rr.termination.to_string();
                    break;
                }
            }
            if (!row.error && options.runs >= 2) row.deterministic = same ? Determinism::Yes : Determinism::No;
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

} // namespace bdiconc
