// bdiconc: run a MAS spec under a concurrency model picked at launch.
//
// Exit codes
//   0  quiescent run / valid spec / deterministic
//   1  usage or I/O error
//   2  parse or validation error
//   3  run ended in fault, timeout or cycle cap; bench cell failed
//   4  check-determinism found differing fingerprints

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bdiconc/bench.hpp"
#include "bdiconc/model.hpp"
#include "bdiconc/parser.hpp"
#include "bdiconc/worker.hpp"

using namespace bdiconc;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvalid = 2, kRunFailed = 3, kNondeterministic = 4 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::optional<std::uint64_t> parse_max_cycles(const std::string& text)
{
    if (text == "unlimited") return std::nullopt;
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || v == 0)
        throw UsageError("--max-cycles expects a positive integer or 'unlimited', got '" + text + "'");
    return v;
}

struct LoadedSpec {
    std::string bytes;
    MasSpec spec;
};

// The only place a spec file is read. The model never influences this.
LoadedSpec load_spec(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read spec file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    LoadedSpec out;
    out.bytes = ss.str();
    try {
        out.spec = parse_spec(out.bytes);
    } catch (const ParseError& e) {
        throw SpecError(path + ":" + e.what());
    }
    if (auto errors = validate(out.spec); !errors.empty()) {
        std::string msg = path + ": invalid spec";
        for (const auto& err : errors) msg += "\n  " + err.to_string();
        throw SpecError(msg);
    }
    return out;
}

ExecutionModel model_or_usage(const std::string& selector)
{
    try {
        return parse_model(selector);
    } catch (const ModelSyntaxError& e) {
        throw UsageError(e.what());
    }
}

void write_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << content)) throw UsageError("cannot write '" + path + "'");
}

std::string fp_text(const std::optional<Fingerprint>& fp)
{
    return fp ? format_fingerprint(*fp) : "-";
}

struct RunOptions {
    std::string spec_path;
    std::string model = "aa1t:rr";
    std::uint64_t seed = 0;
    std::string max_cycles = "unlimited";
    std::uint64_t timeout_ms = 60'000;
    std::string trace_path;
    bool trace_jsonl = false;
    std::string metrics_path;
    std::uint64_t runs = 5;
};

RunConfig make_config(const RunOptions& o)
{
    RunConfig cfg;
    cfg.model = model_or_usage(o.model);
    cfg.seed = o.seed;
    cfg.max_cycles_per_agent = parse_max_cycles(o.max_cycles);
    if (o.timeout_ms == 0) throw UsageError("--timeout-ms must be positive");
    cfg.wall_timeout_ms = o.timeout_ms;
    return cfg;
}

int exit_for(const Termination& t)
{
    return t.kind == Termination::Kind::Quiescent ? kOk : kRunFailed;
}

int cmd_run(const RunOptions& o)
{
    RunConfig cfg = make_config(o);
    cfg.trace_level = o.trace_path.empty() ? TraceLevel::FingerprintOnly : TraceLevel::Full;
    const LoadedSpec loaded = load_spec(o.spec_path);
    const RunReport report = run(loaded.spec, cfg);

    std::cout << "# model " << report.model << " seed " << report.seed << "\n";
    std::cout << "termination: " << report.termination.to_string() << "\n";
    std::cout << "combined_fingerprint: " << fp_text(report.combined_fingerprint) << "\n";
    std::cout << "interleaving_fingerprint: " << fp_text(report.interleaving_fingerprint) << "\n";
    std::cout << "wall_time_ms: " << report.metrics.wall_time_ms << "\n";
    std::cout << "peak_workers: " << report.metrics.peak_workers << " (" << report.metrics.worker_kind << ")\n";
    for (const auto& a : report.agents) {
        std::cout << a.name << ": cycles=" << a.cycle_count << " fingerprint=" << fp_text(a.fingerprint)
                  << " beliefs=[";
        for (std::size_t i = 0; i < a.beliefs.size(); ++i) std::cout << (i ? "," : "") << a.beliefs[i];
        std::cout << "]";
        if (a.fault) std::cout << " fault=" << *a.fault;
        std::cout << "\n";
    }

    if (!o.trace_path.empty()) {
        std::string text;
        for (const auto& ev : report.trace) {
            if (o.trace_jsonl)
                text += ev.to_json().dump() + "\n";
            else
                ev.append_line(text);
        }
        write_file(o.trace_path, text);
    }
    if (!o.metrics_path.empty()) {
        auto j = report.to_json();
        j["spec_file_digest"] = format_fingerprint(fnv1a64(loaded.bytes));
        write_file(o.metrics_path, j.dump(2) + "\n");
    }
    if (report.termination.kind != Termination::Kind::Quiescent)
        std::cerr << "run did not reach quiescence: " << report.termination.to_string() << "\n";
    return exit_for(report.termination);
}

int cmd_check_determinism(const RunOptions& o)
{
    if (o.runs < 2) throw UsageError("--runs must be at least 2");
    RunConfig cfg = make_config(o);
    const LoadedSpec loaded = load_spec(o.spec_path);

    std::cout << "# model " << to_selector(cfg.model) << " seed " << cfg.seed << " runs " << o.runs << "\n";
    std::optional<Fingerprint> combined, interleaving;
    bool same = true;
    for (std::uint64_t k = 0; k < o.runs; ++k) {
        const RunReport r = run(loaded.spec, cfg);
        std::cout << "run " << k << ": combined=" << fp_text(r.combined_fingerprint)
                  << " interleaving=" << fp_text(r.interleaving_fingerprint) << " "
                  << r.termination.to_string() << "\n";
        if (r.termination.kind != Termination::Kind::Quiescent) {
            std::cerr << "run " << k << " did not reach quiescence: " << r.termination.to_string() << "\n";
            return kRunFailed;
        }
        if (k == 0) {
            combined = r.combined_fingerprint;
            interleaving = r.interleaving_fingerprint;
        } else if (r.combined_fingerprint != combined || r.interleaving_fingerprint != interleaving) {
            same = false;
        }
    }
    std::cout << (same ? "deterministic" : "nondeterministic") << "\n";
    return same ? kOk : kNondeterministic;
}

struct BenchCli {
    std::string models = "all";
    std::vector<std::string> workloads;
    std::uint64_t runs = 3;
    std::uint64_t seed = 0;
    std::uint64_t timeout_ms = 120'000;
    std::string max_cycles = "unlimited";
    bool json = false;
    bool csv = false;
};

int cmd_bench(const BenchCli& b)
{
    std::vector<ExecutionModel> models;
    try {
        models = parse_model_list(b.models);
    } catch (const ModelSyntaxError& e) {
        throw UsageError(e.what());
    }
    std::vector<Workload> workloads;
    for (const auto& w : b.workloads) {
        try {
            workloads.push_back(parse_workload(w));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (b.runs == 0) throw UsageError("--runs must be positive");
    BenchOptions opt;
    opt.runs = b.runs;
    opt.seed = b.seed;
    opt.wall_timeout_ms = b.timeout_ms;
    opt.max_cycles_per_agent = parse_max_cycles(b.max_cycles);
    const BenchReport report = run_matrix(models, workloads, opt);
    if (b.json)
        std::cout << report.to_json().dump(2) << "\n";
    else if (b.csv)
        std::cout << report.to_csv();
    else
        std::cout << report.to_text();
    return report.any_error() ? kRunFailed : kOk;
}

int cmd_validate(const std::string& path)
{
    const LoadedSpec loaded = load_spec(path);
    std::size_t instances = 0;
    for (const auto& a : loaded.spec.agents()) instances += static_cast<std::size_t>(a.replicas);
    std::cout << path << ": ok (" << loaded.spec.agents().size() << " agent definitions, " << instances
              << " instances)\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"BDI multi-agent runtime with pluggable concurrency models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "bdiconc 1.0");

    RunOptions run_opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--spec", run_opt.spec_path, "MAS spec file")->required();
        sub->add_option("--model", run_opt.model, std::string("concurrency model: ") + std::string(kModelGrammar))
            ->envname("BDI_CONC_MODEL")
            ->capture_default_str();
        sub->add_option("--seed", run_opt.seed, "seed for aa1t:rand")->capture_default_str();
        sub->add_option("--max-cycles", run_opt.max_cycles, "per-agent cycle cap, or 'unlimited'")
            ->capture_default_str();
        sub->add_option("--timeout-ms", run_opt.timeout_ms, "wall-clock limit")->capture_default_str();
    };

    auto* run_cmd = app.add_subcommand("run", "run a spec to quiescence");
    add_common(run_cmd);
    run_cmd->add_option("--trace", run_opt.trace_path, "write the full trace here");
    run_cmd->add_flag("--trace-jsonl", run_opt.trace_jsonl, "write the trace as JSON lines");
    run_cmd->add_option("--metrics", run_opt.metrics_path, "write the run report as JSON here");

    auto* det_cmd = app.add_subcommand("check-determinism", "run repeatedly and compare fingerprints");
    add_common(det_cmd);
    det_cmd->add_option("--runs", run_opt.runs, "number of runs (>= 2)")->capture_default_str();

    BenchCli bench_opt;
    auto* bench_cmd = app.add_subcommand("bench", "run the model x workload matrix");
    bench_cmd->add_option("--models", bench_opt.models, "'all' or comma-separated selectors")->capture_default_str();
    bench_cmd->add_option("--workload", bench_opt.workloads, std::string(kWorkloadGrammar))->required();
    bench_cmd->add_option("--runs", bench_opt.runs, "runs per cell")->capture_default_str();
    bench_cmd->add_option("--seed", bench_opt.seed)->capture_default_str();
    bench_cmd->add_option("--timeout-ms", bench_opt.timeout_ms, "per-run wall-clock limit")->capture_default_str();
    bench_cmd->add_option("--max-cycles", bench_opt.max_cycles)->capture_default_str();
    auto* json_flag = bench_cmd->add_flag("--json", bench_opt.json, "JSON output");
    bench_cmd->add_flag("--csv", bench_opt.csv, "CSV output")->excludes(json_flag);

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "parse and validate a spec");
    validate_cmd->add_option("--spec", validate_path, "MAS spec file")->required();

    WorkerOptions worker_opt;
    std::string worker_cycles = "unlimited";
    std::string worker_trace = "fingerprint";
    auto* worker_cmd = app.add_subcommand("worker", "");   // empty group: hidden
    worker_cmd->group("");
    worker_cmd->add_option("--agent", worker_opt.agent)->required();
    worker_cmd->add_option("--max-cycles", worker_cycles);
    worker_cmd->add_option("--trace-level", worker_trace);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run_cmd) return cmd_run(run_opt);
        if (*det_cmd) return cmd_check_determinism(run_opt);
        if (*bench_cmd) return cmd_bench(bench_opt);
        if (*validate_cmd) return cmd_validate(validate_path);
        if (*worker_cmd) {
            worker_opt.max_cycles = parse_max_cycles(worker_cycles);
            const auto level = trace_level_from_string(worker_trace);
            if (!level) throw UsageError("unknown trace level '" + worker_trace + "'");
            worker_opt.trace_level = *level;
            return run_worker(worker_opt);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const SpecError& e) {
        std::cerr << e.what() << "\n";
        return kInvalid;
    } catch (const InvalidSpec& e) {
        std::cerr << e.what() << "\n";
        return kInvalid;
    } catch (const SpawnFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRunFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
