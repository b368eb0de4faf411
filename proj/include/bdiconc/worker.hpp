#pragma once

// Child side of the one-agent-one-process model. The supervisor starts the
// program as `<exe> worker --agent <instance>` with the agent's definition
// as spec text on stdin, and talks the wire protocol over fd 3 (frames in)
// and fd 4 (frames out).
//
// Control frames:
//   supervisor -> child   !roster|<name>,<name>,...   first frame, once
//                         !stop|                      finish and report
//   child -> supervisor   !idle|<messages read>       nothing left to do
//                         !report|<json>              reply to !stop

#include <cstdint>
#include <optional>
#include <string>

#include "bdiconc/model.hpp"

namespace bdiconc {

inline constexpr int kWorkerInFd = 3;
inline constexpr int kWorkerOutFd = 4;

struct WorkerOptions {
    std::string agent;
    std::optional<std::uint64_t> max_cycles;
    TraceLevel trace_level = TraceLevel::FingerprintOnly;
};

// Returns the process exit status.
int run_worker(const WorkerOptions& options);

} // namespace bdiconc
