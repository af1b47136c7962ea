#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#if defined(__unix__) || defined(__APPLE__)
#include <sys/resource.h>
#endif

namespace qualc {

/// One CLI run, serialized as a single JSON object:
///   { "command": str, "status": "SAT"|"UNSAT"|"ERROR"|"TIMEOUT",
///     "elapsed_ms": number, "peak_memory_bytes": number|null,
///     "stats": { "decisions": int, "backtracks": int, "nogoods_added": int },
///     "outputs": [str], "oracle_agreement": bool|null }
/// The status maps onto the process exit code: SAT/success 0, UNSAT 1,
/// ERROR 2, TIMEOUT 3.
struct RunReport {
    std::string command;
    std::string status = "SAT";
    double elapsed_ms = 0.0;
    std::optional<std::uint64_t> peak_memory_bytes;
    std::uint64_t decisions = 0;
    std::uint64_t backtracks = 0;
    std::uint64_t nogoods_added = 0;
    std::vector<std::string> outputs;
    std::optional<bool> oracle_agreement;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["command"] = command;
        j["status"] = status;
        j["elapsed_ms"] = elapsed_ms;
        if (peak_memory_bytes)
            j["peak_memory_bytes"] = *peak_memory_bytes;
        else
            j["peak_memory_bytes"] = nullptr;
        j["stats"] = {{"decisions", decisions}, {"backtracks", backtracks}, {"nogoods_added", nogoods_added}};
        j["outputs"] = outputs;
        if (oracle_agreement)
            j["oracle_agreement"] = *oracle_agreement;
        else
            j["oracle_agreement"] = nullptr;
        return j;
    }

    static RunReport from_json(const nlohmann::json& j) {
        RunReport r;
        r.command = j.at("command").get<std::string>();
        r.status = j.at("status").get<std::string>();
        r.elapsed_ms = j.at("elapsed_ms").get<double>();
        if (!j.at("peak_memory_bytes").is_null())
            r.peak_memory_bytes = j.at("peak_memory_bytes").get<std::uint64_t>();
        r.decisions = j.at("stats").at("decisions").get<std::uint64_t>();
        r.backtracks = j.at("stats").at("backtracks").get<std::uint64_t>();
        r.nogoods_added = j.at("stats").at("nogoods_added").get<std::uint64_t>();
        r.outputs = j.at("outputs").get<std::vector<std::string>>();
        if (!j.at("oracle_agreement").is_null()) r.oracle_agreement = j.at("oracle_agreement").get<bool>();
        return r;
    }
};

inline int exit_code_for_status(const std::string& status) {
    if (status == "SAT") return 0;
    if (status == "UNSAT") return 1;
    if (status == "TIMEOUT") return 3;
    return 2; // ERROR
}

/// Best-effort peak resident set size of this process, in bytes.
inline std::optional<std::uint64_t> peak_rss_bytes() {
#if defined(__unix__) || defined(__APPLE__)
    struct rusage usage {};
    if (getrusage(RUSAGE_SELF, &usage) == 0) {
#if defined(__APPLE__)
        return static_cast<std::uint64_t>(usage.ru_maxrss); // bytes on macOS
#else
        return static_cast<std::uint64_t>(usage.ru_maxrss) * 1024; // kilobytes on Linux
#endif
    }
#endif
    return std::nullopt;
}

} // namespace qualc
