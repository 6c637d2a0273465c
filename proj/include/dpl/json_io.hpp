#pragma once

#include <string>

#include "json.hpp"

namespace dpl {

using json = nlohmann::json;

// Canonical serialization for every artifact the tool writes: keys sorted
// (nlohmann objects already iterate in key order), floats at 17 significant
// digits so files are byte-stable across runs and reload exactly.
std::string canonical_dump(const json& j, int indent = -1);

std::string format_double(double v);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace dpl
