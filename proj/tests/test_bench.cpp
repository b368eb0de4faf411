#include <gtest/gtest.h>

#include "bdiconc/bench.hpp"
#include "bdiconc/parser.hpp"
#include "support.hpp"

using namespace bdiconc;
using testsupport::run_workload;

TEST(Workload, ParseAndName)
{
    EXPECT_EQ(workload_name(parse_workload("counter:50:20")), "counter:50:20");
    EXPECT_EQ(workload_name(parse_workload("ring:8:10")), "ring:8:10");
    EXPECT_EQ(workload_name(parse_workload("fanin:8:50")), "fanin:8:50");
    const auto w = parse_workload("fanin:3:7");
    ASSERT_TRUE(std::holds_alternative<FanIn>(w));
    EXPECT_EQ(std::get<FanIn>(w).producers, 3u);
    EXPECT_EQ(std::get<FanIn>(w).items_each, 7u);
    for (const char* bad : {"", "counter", "counter:1", "counter:0:5", "ring:3:0", "mesh:1:1", "counter:1:x",
                            "counter:1:2:3", "counter:-1:2", "counter:1:10000000000"})
        EXPECT_THROW(parse_workload(bad), std::invalid_argument) << bad;
}

TEST(Workload, RenderedSpecsValidate)
{
    for (const Workload& w : {Workload(CounterFarm{1, 0}), Workload(CounterFarm{7, 3}), Workload(TokenRing{1, 1}),
                              Workload(TokenRing{5, 2}), Workload(FanIn{1, 0}), Workload(FanIn{4, 9})}) {
        const auto spec = parse_spec(render(w));
        EXPECT_TRUE(validate(spec).empty()) << render(w);
    }
}

TEST(Workload, InstanceNames)
{
    auto names = [](const Workload& w) {
        std::vector<std::string> out;
        for (const auto& i : expand_instances(parse_spec(render(w)))) out.push_back(i.instance_name);
        return out;
    };
    EXPECT_EQ(names(CounterFarm{1, 2}), std::vector<std::string>{"counter"});
    EXPECT_EQ(names(CounterFarm{2, 2}), (std::vector<std::string>{"counter#0", "counter#1"}));
    EXPECT_EQ(names(TokenRing{3, 1}), (std::vector<std::string>{"ring0", "ring1", "ring2"}));
    EXPECT_EQ(names(FanIn{2, 1}), (std::vector<std::string>{"producer#0", "producer#1", "sink"}));
}

TEST(Workload, SmallestRingSendsTwice)
{
    const auto r = run_workload(TokenRing{2, 1}, "aa1t:rr", TraceLevel::Full);
    std::size_t sends = 0;
    for (const auto& e : r.trace) sends += e.kind == TraceKind::MsgSend;
    EXPECT_EQ(sends, 2u);
    EXPECT_EQ(r.metrics.messages_received, 2u);
}

TEST(Workload, ZeroTargetCounterStaysAtZero)
{
    const auto r = run_workload(CounterFarm{3, 0}, "aa1el");
    for (const auto& a : r.agents) {
        EXPECT_EQ(a.beliefs, std::vector<std::string>{"x(0)"});
        // The goal finds no applicable plan; that is one progressing cycle.
        EXPECT_EQ(a.cycle_count, 1u);
    }
}

TEST(Workload, CounterCyclesFollowClosedForm)
{
    // Per increment: the goal cycle plus the two belief-event cycles; one
    // final goal cycle finds no plan.
    for (std::uint64_t k : {0u, 1u, 2u, 5u, 13u}) {
        const auto r = run_workload(CounterFarm{2, k}, "aa1t:rr");
        for (const auto& a : r.agents) {
            EXPECT_EQ(a.cycle_count, 3 * k + 1) << k;
            EXPECT_EQ(a.beliefs, std::vector<std::string>{"x(" + std::to_string(k) + ")"});
        }
    }
}

TEST(Workload, TotalsGrowWithSize)
{
    std::uint64_t prev = 0;
    for (std::uint64_t laps : {1u, 2u, 4u, 8u}) {
        const auto r = run_workload(TokenRing{4, laps}, "aa1el");
        EXPECT_EQ(r.metrics.messages_received, 4 * laps);
        std::uint64_t cycles = 0;
        for (const auto& a : r.agents) cycles += a.cycle_count;
        EXPECT_GT(cycles, prev);
        prev = cycles;
    }
}

TEST(ModelList, AllAndExplicit)
{
    const auto all = parse_model_list("all");
    ASSERT_EQ(all.size(), 6u);
    std::vector<std::string> sel;
    for (const auto& m : all) sel.push_back(to_selector(m));
    EXPECT_EQ(sel, (std::vector<std::string>{"1a1t", "aa1t:rr", "aa1el", "aa1e:fixed:1", "aa1e:var:0:8:50", "1a1p"}));
    EXPECT_EQ(parse_model_list("aa1el,1a1t").size(), 2u);
    EXPECT_THROW(parse_model_list("aa1el,,1a1t"), ModelSyntaxError);
}

TEST(Matrix, RowsAndDeterminism)
{
    BenchOptions opts;
    opts.runs = 2;
    opts.worker_executable = testsupport::kCliPath;
    const auto report = run_matrix(parse_model_list("aa1t:rr,aa1el,aa1e:fixed:2,1a1t"), {CounterFarm{4, 3}, FanIn{3, 4}}, opts);
    ASSERT_EQ(report.rows.size(), 8u);
    EXPECT_FALSE(report.any_error());
    for (const auto& r : report.rows) {
        SCOPED_TRACE(r.model + " " + r.workload);
        EXPECT_EQ(r.termination, "quiescent");
        EXPECT_FALSE(r.error);
        if (r.model == "aa1t:rr" || r.model == "aa1el") {
            EXPECT_EQ(r.deterministic, Determinism::Yes);
            EXPECT_EQ(r.peak_workers, 1);
        }
        if (r.model == "1a1t") {
            EXPECT_EQ(r.peak_workers, 4);
        }
        if (r.workload == "fanin:3:4") {
            EXPECT_EQ(r.messages, 12u);
        }
        if (r.workload == "counter:4:3") {
            EXPECT_EQ(r.total_cycles, 4u * 10u);
        }
    }
    EXPECT_EQ(report.rows[0].model, "aa1t:rr");
    EXPECT_EQ(report.rows[0].workload, "counter:4:3");
    EXPECT_EQ(report.rows[4].workload, "fanin:3:4");

    const auto text = report.to_text();
    EXPECT_EQ(text.rfind("# seed 0, runs 2\n", 0), 0u);
    EXPECT_NE(text.find("peak_workers"), std::string::npos);
    const auto csv = report.to_csv();
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
    EXPECT_EQ(csv.rfind("model,workload,peak_workers,os_probe,deterministic,wall_ms,total_cycles,fairness,messages,status", 0), 0u);
    const auto j = report.to_json();
    EXPECT_EQ(j.at("rows").size(), 8u);
    EXPECT_EQ(j.at("runs"), 2);
}

TEST(Matrix, SingleRunDeterminismIsNotApplicable)
{
    BenchOptions opts;
    opts.runs = 1;
    const auto report = run_matrix({parse_model("aa1el")}, {CounterFarm{1, 1}}, opts);
    EXPECT_EQ(report.rows.at(0).deterministic, Determinism::NotApplicable);
    EXPECT_STREQ(determinism_name(Determinism::NotApplicable), "n/a");
}

TEST(Matrix, FailingCellIsRecordedNotThrown)
{
    BenchOptions opts;
    opts.runs = 1;
    opts.max_cycles_per_agent = 2;
    const auto report = run_matrix({parse_model("aa1el"), parse_model("aa1t:rr")}, {CounterFarm{2, 5}}, opts);
    ASSERT_EQ(report.rows.size(), 2u);
    EXPECT_TRUE(report.any_error());
    EXPECT_TRUE(report.rows[0].error);
    EXPECT_EQ(report.rows[0].termination, "max_cycles");
}
