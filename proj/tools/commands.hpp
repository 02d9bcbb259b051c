#pragma once

// Subcommands of brakeorb. Each returns the process exit code.

#include "config.hpp"

#include <filesystem>
#include <fstream>
#include <optional>

namespace brake::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitFailure = 2;

/// Lines "LEVEL module: message" to stderr and, once opened, to a log file.
class Logger {
public:
    explicit Logger(std::ostream* err) : err_(err) {}
    void open(const std::filesystem::path& path);
    void info(const std::string& module, const std::string& message) { write("INFO", module, message); }
    void warn(const std::string& module, const std::string& message) { write("WARN", module, message); }
    void error(const std::string& module, const std::string& message) { write("ERROR", module, message); }

private:
    void write(const char* level, const std::string& module, const std::string& message);
    std::ostream* err_;
    std::ofstream file_;
};

struct RunContext {
    Config config;
    std::filesystem::path out = "out";
    unsigned seed = 1;
    /// 0 means every available core.
    int threads = 0;
    Logger* log = nullptr;
    /// Report text goes here.
    std::ostream* report = nullptr;
};

/// Seed and threads from [run], overridden by command-line flags when given.
void apply_run_section(RunContext& ctx, std::optional<unsigned> seed, std::optional<int> threads);

int cmd_find_orbit(RunContext& ctx);
int cmd_sweep(RunContext& ctx);
/// With report_only, renders <out>/estimates.jsonl without computing.
int cmd_capacity(RunContext& ctx, bool report_only);
int cmd_embed_torus(RunContext& ctx);
/// Model, s_order and tolerances come from `ctx.config` when it has a [model]
/// section, otherwise from the metadata file next to the orbit CSV.
int cmd_verify(RunContext& ctx, const std::filesystem::path& orbit_csv);

}  // namespace brake::cli
