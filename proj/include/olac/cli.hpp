// Command-line entry points: repository authoring, the four services,
// and the aggregator's register/harvest/query workflow.

#pragma once

#include <iosfwd>
#include <string>

namespace olac {

struct ToolConfig {
    std::string data_dir = "olac-data";
    std::string profile_path; // application-profile manifest (vocabulary paths live inside)
    int page_size = 500;
    int vida_ttl_seconds = 600;
    int token_expiry_hours = 24;
    std::string vida_listen = "127.0.0.1:8310";
    std::string provider_listen = "127.0.0.1:8311";
    std::string aggregator_listen = "127.0.0.1:8312";
    std::string viser_listen = "127.0.0.1:8313";
    std::string aggregator_url; // where query/viser reach the aggregator

    bool operator==(const ToolConfig&) const = default;
};

// Layered configuration: defaults, then key=value lines from
// config_path (empty string skips the file), then OLAC_* environment
// variables. Unknown keys in the file are an error.
ToolConfig load_tool_config(const std::string& config_path);

// Exit codes: 0 success, 1 validation/user error, 2 environment/IO error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

} // namespace olac
