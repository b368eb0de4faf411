#include <gtest/gtest.h>

#include <csignal>
#include <map>
#include <mutex>
#include <random>
#include <set>

#include "bdiconc/bench.hpp"
#include "bdiconc/model.hpp"
#include "bdiconc/parser.hpp"
#include "support.hpp"

using namespace bdiconc;
using testsupport::config_for;
using testsupport::run_workload;

namespace {

const std::vector<std::string> kAllSelectors{"1a1t",         "aa1t:rr",      "aa1t:rand:42", "aa1el",
                                             "aa1e:fixed:1", "aa1e:fixed:4", "aa1e:var:0:8", "1a1p"};

const std::vector<std::string> kInProcess{"1a1t",         "aa1t:rr",      "aa1t:rand:42", "aa1el",
                                          "aa1e:fixed:1", "aa1e:fixed:4", "aa1e:var:0:8"};

std::string belief_of(const RunReport& r, const std::string& agent)
{
    for (const auto& a : r.agents)
        if (a.name == agent) {
            std::string out;
            for (const auto& b : a.beliefs) out += b + " ";
            return out;
        }
    return "<missing>";
}

} // namespace

TEST(ModelSelector, ParseAndRender)
{
    for (const char* s : {"1a1t", "aa1t:rr", "aa1t:rand", "aa1t:rand:42", "aa1el", "aa1e:fixed:4", "aa1e:var:0:8:50",
                          "aa1e:var:2:3:10", "1a1p"})
        EXPECT_EQ(to_selector(parse_model(s)), s) << s;
    EXPECT_EQ(to_selector(parse_model("aa1t")), "aa1t:rr");
    EXPECT_EQ(to_selector(parse_model("aa1e:var:0:8")), "aa1e:var:0:8:50");
    EXPECT_EQ(parse_model("aa1e:var:1:4:7"), ExecutionModel(SharedExecutorVariable{1, 4, 7}));
    for (const char* bad : {"", "aa1t:fifo", "aa1e:fixed:0", "aa1e:fixed", "aa1e:var:5:2", "aa1e:var:0:0", "1A1T",
                            "aa1t:rand:x", "aa1e:fixed:4:1", "nope"})
        EXPECT_THROW(parse_model(bad), ModelSyntaxError) << bad;
}

TEST(ModelSelector, SingleWorkerClassification)
{
    EXPECT_TRUE(is_single_worker(parse_model("aa1t:rr")));
    EXPECT_TRUE(is_single_worker(parse_model("aa1t:rand:1")));
    EXPECT_TRUE(is_single_worker(parse_model("aa1el")));
    EXPECT_TRUE(is_single_worker(parse_model("aa1e:fixed:1")));
    EXPECT_FALSE(is_single_worker(parse_model("aa1e:fixed:2")));
    EXPECT_FALSE(is_single_worker(parse_model("1a1t")));
    EXPECT_FALSE(is_single_worker(parse_model("1a1p")));
    EXPECT_EQ(all_models().size(), 6u);
}

TEST(Run, CounterFarmUnderEveryModel)
{
    for (const auto& sel : kAllSelectors) {
        const auto r = run_workload(CounterFarm{3, 2}, sel);
        SCOPED_TRACE(sel);
        EXPECT_EQ(r.termination.kind, Termination::Kind::Quiescent) << r.termination.to_string();
        ASSERT_EQ(r.agents.size(), 3u);
        for (const auto& a : r.agents) {
            EXPECT_EQ(a.beliefs, std::vector<std::string>{"x(2)"});
            EXPECT_EQ(a.cycle_count, 7u);
            EXPECT_FALSE(a.halted);
        }
        EXPECT_EQ(r.model, sel == "aa1e:var:0:8" ? "aa1e:var:0:8:50" : sel);
    }
}

TEST(Run, ModelsAgreeOnCounterFarm)
{
    const auto ref = run_workload(CounterFarm{6, 5}, "aa1t:rr");
    for (const auto& sel : kAllSelectors) {
        SCOPED_TRACE(sel);
        const auto r = run_workload(CounterFarm{6, 5}, sel);
        ASSERT_EQ(r.agents.size(), ref.agents.size());
        EXPECT_EQ(r.combined_fingerprint, ref.combined_fingerprint);
        for (std::size_t i = 0; i < r.agents.size(); ++i) {
            EXPECT_EQ(r.agents[i].name, ref.agents[i].name);
            EXPECT_EQ(r.agents[i].beliefs_digest, ref.agents[i].beliefs_digest);
            EXPECT_EQ(r.agents[i].cycle_count, ref.agents[i].cycle_count);
            EXPECT_EQ(r.agents[i].fingerprint, ref.agents[i].fingerprint);
        }
    }
}

// With messages in play an agent's trace depends on how arrivals batch into
// its cycles, so only the final belief bases are model independent.
TEST(Run, ModelsAgreeOnFinalBeliefs)
{
    for (const Workload& w : {Workload(TokenRing{5, 3}), Workload(FanIn{4, 6})}) {
        const auto ref = run_workload(w, "aa1t:rr");
        for (const auto& sel : kAllSelectors) {
            SCOPED_TRACE(workload_name(w) + " " + sel);
            const auto r = run_workload(w, sel);
            ASSERT_EQ(r.agents.size(), ref.agents.size());
            for (std::size_t i = 0; i < r.agents.size(); ++i)
                EXPECT_EQ(r.agents[i].beliefs, ref.agents[i].beliefs) << r.agents[i].name;
        }
    }
}

TEST(Run, WorkerBounds)
{
    const Workload w = CounterFarm{8, 3};
    auto check_probe = [](const RunReport& r) {
        if (r.metrics.os_probe_peak) {
            EXPECT_GE(*r.metrics.os_probe_peak, r.metrics.peak_workers);
        }
    };
    auto r = run_workload(w, "1a1t");
    EXPECT_EQ(r.metrics.peak_workers, 8);
    check_probe(r);
    for (const char* sel : {"aa1t:rr", "aa1t:rand:3", "aa1el"}) {
        r = run_workload(w, sel);
        EXPECT_EQ(r.metrics.peak_workers, 1) << sel;
        check_probe(r);
    }
    for (int k : {1, 2, 4}) {
        r = run_workload(w, "aa1e:fixed:" + std::to_string(k));
        EXPECT_GE(r.metrics.peak_workers, 1);
        EXPECT_LE(r.metrics.peak_workers, k);
        check_probe(r);
    }
    r = run_workload(w, "aa1e:var:0:8");
    EXPECT_GE(r.metrics.peak_workers, 1);
    EXPECT_LE(r.metrics.peak_workers, 8);
    check_probe(r);

    r = run_workload(w, "1a1p");
    EXPECT_EQ(r.metrics.worker_kind, "process");
    EXPECT_EQ(r.metrics.peak_workers, 8);
    check_probe(r);
}

TEST(Run, SingleWorkerModelsAreDeterministic)
{
    for (const char* sel : {"aa1t:rr", "aa1t:rand:42", "aa1el", "aa1e:fixed:1"}) {
        const auto first = run_workload(TokenRing{6, 4}, sel);
        ASSERT_TRUE(first.interleaving_fingerprint) << sel;
        for (int i = 0; i < 4; ++i) {
            const auto again = run_workload(TokenRing{6, 4}, sel);
            EXPECT_EQ(again.combined_fingerprint, first.combined_fingerprint) << sel;
            EXPECT_EQ(again.interleaving_fingerprint, first.interleaving_fingerprint) << sel;
        }
    }
}

TEST(Run, ParallelModelsHaveNoInterleavingFingerprint)
{
    for (const char* sel : {"1a1t", "aa1e:fixed:4", "aa1e:var:0:8", "1a1p"})
        EXPECT_FALSE(run_workload(CounterFarm{2, 1}, sel).interleaving_fingerprint) << sel;
}

TEST(Run, RandomPolicyDependsOnSeed)
{
    std::set<Fingerprint> seen;
    for (int seed = 0; seed < 8; ++seed) {
        const auto r = run_workload(FanIn{4, 3}, "aa1t:rand:" + std::to_string(seed));
        seen.insert(*r.interleaving_fingerprint);
    }
    EXPECT_GT(seen.size(), 1u);

    // Without a seed in the selector the run seed is used.
    auto cfg = config_for("aa1t:rand");
    cfg.seed = 5;
    const auto spec = parse_spec(render(FanIn{4, 3}));
    EXPECT_EQ(run(spec, cfg).interleaving_fingerprint, run_workload(FanIn{4, 3}, "aa1t:rand:5").interleaving_fingerprint);
}

TEST(Run, RoundRobinAlternatesAgents)
{
    const auto spec = parse_spec(R"(
        agent a { goal !go. plan +!go <- !s. plan +!s <- .print(1). }
        agent b { goal !go. plan +!go <- !s. plan +!s <- .print(2). }
    )");
    const auto r = run(spec, config_for("aa1t:rr", TraceLevel::Full));
    std::vector<std::string> order;
    for (const auto& e : r.trace)
        if (e.kind == TraceKind::CycleStart) order.push_back(e.agent);
    ASSERT_GE(order.size(), 4u);
    EXPECT_EQ(std::vector<std::string>(order.begin(), order.begin() + 4),
              (std::vector<std::string>{"a", "b", "a", "b"}));
    for (std::size_t i = 0; i < r.trace.size(); ++i) EXPECT_EQ(r.trace[i].global_index, std::optional<std::uint64_t>(i));
}

TEST(Run, FixedOnePoolMatchesEventLoop)
{
    for (const Workload& w : {Workload(CounterFarm{5, 4}), Workload(TokenRing{4, 3}), Workload(FanIn{3, 5})}) {
        const auto el = run_workload(w, "aa1el", TraceLevel::Full);
        const auto pool = run_workload(w, "aa1e:fixed:1", TraceLevel::Full);
        EXPECT_EQ(pool.combined_fingerprint, el.combined_fingerprint);
        EXPECT_EQ(pool.interleaving_fingerprint, el.interleaving_fingerprint);
        EXPECT_EQ(pool.trace, el.trace);
    }
}

TEST(Run, EventLoopMatchesRoundRobinWithoutParking)
{
    const auto el = run_workload(CounterFarm{6, 8}, "aa1el");
    const auto rr = run_workload(CounterFarm{6, 8}, "aa1t:rr");
    EXPECT_EQ(el.combined_fingerprint, rr.combined_fingerprint);
    EXPECT_EQ(el.interleaving_fingerprint, rr.interleaving_fingerprint);
}

TEST(Run, TraceLevels)
{
    const auto full = run_workload(CounterFarm{1, 2}, "aa1t:rr", TraceLevel::Full);
    EXPECT_EQ(full.trace.size(), 14u);
    std::string text;
    for (const auto& e : full.trace) e.append_line(text);
    EXPECT_EQ(text, testsupport::read_file(std::string(testsupport::kSourceDir) + "/tests/golden/counter_k2.trace"));
    EXPECT_EQ(full.agents[0].fingerprint, fnv1a64(text));

    const auto fp = run_workload(CounterFarm{1, 2}, "aa1t:rr", TraceLevel::FingerprintOnly);
    EXPECT_TRUE(fp.trace.empty());
    EXPECT_EQ(fp.combined_fingerprint, full.combined_fingerprint);

    const auto off = run_workload(CounterFarm{1, 2}, "aa1t:rr", TraceLevel::Off);
    EXPECT_FALSE(off.combined_fingerprint);
    EXPECT_FALSE(off.agents[0].fingerprint);
    EXPECT_EQ(off.agents[0].cycle_count, 7u);
}

TEST(Run, FullTraceUnderParallelModelIsGroupedPerAgent)
{
    const auto r = run_workload(CounterFarm{3, 2}, "aa1e:fixed:4", TraceLevel::Full);
    ASSERT_EQ(r.trace.size(), 3u * 14u);
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        EXPECT_EQ(r.trace[i].agent, "counter#" + std::to_string(i / 14));
        EXPECT_FALSE(r.trace[i].global_index);
    }
}

TEST(Run, TimeoutUnderEveryModel)
{
    const auto spec = parse_spec(render(CounterFarm{2, 1'000'000'000}));
    for (const auto& sel : kAllSelectors) {
        auto cfg = config_for(sel);
        cfg.wall_timeout_ms = 300;
        const auto r = run(spec, cfg);
        EXPECT_EQ(r.termination.kind, Termination::Kind::Timeout) << sel;
        EXPECT_LT(r.metrics.wall_time_ms, 20'000) << sel;
    }
}

TEST(Run, MaxCyclesCapsEachAgent)
{
    const auto spec = parse_spec(render(CounterFarm{3, 100}));
    for (const auto& sel : kAllSelectors) {
        auto cfg = config_for(sel);
        cfg.max_cycles_per_agent = 5;
        const auto r = run(spec, cfg);
        EXPECT_EQ(r.termination.kind, Termination::Kind::MaxCycles) << sel;
        for (const auto& a : r.agents) {
            EXPECT_EQ(a.cycle_count, 5u) << sel;
            EXPECT_TRUE(a.capped);
        }
    }
}

TEST(Run, FaultReportsFirstFaultingAgent)
{
    const auto spec = parse_spec(R"(
        agent ok { goal !go. plan +!go <- +done. }
        agent bad { belief n(9223372036854775807). goal !go. plan +!go : n(N) <- +n(N+1). }
    )");
    for (const auto& sel : kAllSelectors) {
        const auto r = run(spec, config_for(sel));
        EXPECT_EQ(r.termination.kind, Termination::Kind::Fault) << sel;
        EXPECT_EQ(r.termination.agent, "bad") << sel;
        EXPECT_EQ(r.termination.reason.rfind("arithmetic_overflow(", 0), 0u) << sel;
        EXPECT_EQ(belief_of(r, "ok"), "done ");
    }
}

TEST(Run, HaltedAgentStopsReceiving)
{
    const auto spec = parse_spec(R"(
        agent a { goal !go. plan +!go <- .send(b, tell, x(1)); .send(b, tell, x(2)); .send(b, tell, x(3)). }
        agent b { plan +x(1) <- .halt. }
    )");
    for (const auto& sel : kAllSelectors) {
        const auto r = run(spec, config_for(sel));
        EXPECT_EQ(r.termination.kind, Termination::Kind::Quiescent) << sel;
        EXPECT_TRUE(r.agents[1].halted) << sel;
        EXPECT_EQ(r.metrics.messages_sent, 3u) << sel;
        EXPECT_EQ(r.metrics.messages_sent, r.metrics.messages_received + r.metrics.messages_pending) << sel;
    }
}

TEST(Run, InvalidSpecThrows)
{
    const auto spec = parse_spec("agent a { plan +!go <- .send(nobody, tell, x). }");
    try {
        run(spec, config_for("aa1t:rr"));
        FAIL();
    } catch (const InvalidSpec& e) {
        ASSERT_EQ(e.errors().size(), 1u);
        EXPECT_EQ(e.errors()[0].code, ValidationCode::UnknownReceiver);
    }
}

TEST(Run, NoExclusivityViolations)
{
    for (const char* sel : {"1a1t", "aa1e:fixed:4", "aa1e:var:0:8"}) {
        const auto r = run_workload(FanIn{16, 30}, sel);
        EXPECT_EQ(r.metrics.exclusivity_violations, 0u) << sel;
    }
}

TEST(Run, EmptySpecIsQuiescent)
{
    for (const auto& sel : kAllSelectors) {
        const auto r = run(MasSpec{}, config_for(sel));
        EXPECT_EQ(r.termination.kind, Termination::Kind::Quiescent) << sel;
        EXPECT_TRUE(r.agents.empty());
        EXPECT_EQ(r.metrics.messages_sent, 0u);
    }
}

TEST(Run, MessagesAreConserved)
{
    for (const auto& sel : kAllSelectors) {
        SCOPED_TRACE(sel);
        const auto ring = run_workload(TokenRing{8, 10}, sel);
        EXPECT_EQ(ring.metrics.messages_received, 80u);
        EXPECT_EQ(ring.metrics.messages_sent, 80u);
        EXPECT_EQ(ring.metrics.messages_pending, 0u);

        const auto fan = run_workload(FanIn{8, 50}, sel);
        EXPECT_EQ(belief_of(fan, "sink"), "received(400) ");
        EXPECT_EQ(fan.metrics.messages_received, 400u);
    }
}

TEST(Run, PerSenderFifoAtEachReceiver)
{
    const auto spec = parse_spec(render(FanIn{8, 40}));
    for (const char* sel : {"1a1t", "aa1e:fixed:4", "aa1e:var:0:8", "aa1t:rand:9"}) {
        std::mutex mu;
        std::map<std::pair<std::string, std::string>, std::uint64_t> next;
        std::uint64_t bad = 0;
        auto cfg = config_for(sel);
        cfg.on_deliver = [&](const Message& m) {
            std::lock_guard lock(mu);
            auto& expected = next[{m.sender, m.receiver}];
            if (m.seq != expected) ++bad;
            expected = m.seq + 1;
        };
        run(spec, cfg);
        EXPECT_EQ(bad, 0u) << sel;
        EXPECT_EQ(next.size(), 8u) << sel;
    }
}

TEST(Run, FairnessOfSymmetricFarm)
{
    const auto r = run_workload(CounterFarm{4, 5}, "aa1t:rr");
    EXPECT_DOUBLE_EQ(r.metrics.fairness_ratio, 1.0);
    EXPECT_EQ(r.metrics.per_agent_cycles.size(), 4u);
    EXPECT_EQ(r.metrics.per_agent_cycles.at("counter#0"), 16u);
}

TEST(Run, ReportJson)
{
    const auto r = run_workload(TokenRing{2, 1}, "aa1el");
    const auto j = r.to_json();
    EXPECT_EQ(j.at("model"), "aa1el");
    EXPECT_EQ(j.at("termination").at("kind"), "quiescent");
    EXPECT_EQ(j.at("agents").size(), 2u);
    EXPECT_TRUE(j.at("metrics").contains("peak_workers"));
    EXPECT_TRUE(j.at("metrics").contains("fairness_ratio"));
}

TEST(OneProcess, KilledChildIsReportedAsCrash)
{
    const auto spec = parse_spec(R"(
        agent quick { goal !go. plan +!go <- +done. }
        agent slow { belief x(0). goal !tick. plan +!tick : x(N) & N < 1000000000 <- -x(N); +x(N+1); !tick. }
    )");
    auto cfg = config_for("1a1p");
    cfg.wall_timeout_ms = 30'000;
    std::vector<ChildProcess> seen;
    cfg.on_children_spawned = [&](const std::vector<ChildProcess>& kids) {
        seen = kids;
        ::kill(kids.at(1).pid, SIGKILL);
    };
    const auto r = run(spec, cfg);
    ASSERT_EQ(seen.size(), 2u);
    EXPECT_EQ(seen[1].instance, "slow");
    EXPECT_EQ(r.termination.kind, Termination::Kind::Fault);
    EXPECT_EQ(r.termination.agent, "slow");
    EXPECT_EQ(r.agents[0].beliefs, std::vector<std::string>{"done"});
    EXPECT_EQ(r.termination.reason, "ChildCrash(" + std::to_string(128 + SIGKILL) + ")");
}

TEST(OneProcess, MissingWorkerExecutableIsSpawnFailure)
{
    auto cfg = config_for("1a1p");
    cfg.worker_executable = "/nonexistent/bdiconc";
    EXPECT_THROW(run(parse_spec(render(CounterFarm{1, 1})), cfg), SpawnFailure);
}
