#pragma once

#include <string>

#include "gdi/orchestrator.hpp"

namespace gdi {

// Strict JSON -> RunConfig: unknown keys and wrong types throw
// std::invalid_argument with the offending key in the message.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

std::string run_summary_json(const RunConfig& cfg, const RunResult& res);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace gdi
