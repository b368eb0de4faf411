#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "bdiconc/bench.hpp"
#include "bdiconc/model.hpp"
#include "bdiconc/parser.hpp"

namespace testsupport {

inline constexpr const char* kCliPath = BDICONC_CLI;
inline constexpr const char* kSourceDir = BDICONC_SOURCE_DIR;

inline const char* kCounterSource = R"(agent counter {
    belief x(0).
    goal !tick.
    plan +!tick : x(N) & N < 2 <- -x(N); +x(N+1); !tick.
}
)";

inline bdiconc::RunConfig config_for(std::string_view selector,
                                     bdiconc::TraceLevel level = bdiconc::TraceLevel::FingerprintOnly)
{
    bdiconc::RunConfig cfg;
    cfg.model = bdiconc::parse_model(selector);
    cfg.trace_level = level;
    cfg.worker_executable = kCliPath;
    cfg.wall_timeout_ms = 60'000;
    return cfg;
}

inline bdiconc::RunReport run_workload(const bdiconc::Workload& w, std::string_view selector,
                                       bdiconc::TraceLevel level = bdiconc::TraceLevel::FingerprintOnly)
{
    return bdiconc::run(bdiconc::parse_spec(bdiconc::render(w)), config_for(selector, level));
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace testsupport
