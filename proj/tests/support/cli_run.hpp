#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace stratind::testing {

struct CliResult {
    int code;
    std::string out, err;
};

inline CliResult run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "stratind");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("stratind_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// Reruns a command from its manifest into a second directory and returns
/// the names of outputs that differ.
inline std::vector<std::string> rerun_differences(const std::filesystem::path& first, const std::string& command,
                                                  const std::filesystem::path& second) {
    std::filesystem::remove_all(second);
    auto r = run_cli({command, "--config", (first / "manifest.json").string(), "--out", second.string()});
    if (r.code != 0) return {"exit code " + std::to_string(r.code) + ": " + r.err};
    std::vector<std::string> diff;
    for (const auto& entry : std::filesystem::directory_iterator(first)) {
        auto name = entry.path().filename().string();
        if (slurp(entry.path()) != slurp(second / name)) diff.push_back(name);
    }
    return diff;
}

} // namespace stratind::testing
