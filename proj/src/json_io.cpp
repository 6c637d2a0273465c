#include "dpl/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dpl/error.hpp"

namespace dpl {

std::string format_double(double v) {
  if (!std::isfinite(v)) throw Error("refusing to serialize non-finite number");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

namespace {

void dump_rec(const json& j, std::string& out, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out.push_back('\n');
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::null:
      out += "null";
      break;
    case json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      break;
    case json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      break;
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    case json::value_t::string:
      out += json(j.get<std::string>()).dump();
      break;
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      out.push_back('[');
      bool first = true;
      for (const auto& el : j) {
        if (!first) out.push_back(',');
        first = false;
        newline(depth + 1);
        dump_rec(el, out, indent, depth + 1);
      }
      newline(depth);
      out.push_back(']');
      break;
    }
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out.push_back('{');
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out.push_back(',');
        first = false;
        newline(depth + 1);
        out += json(it.key()).dump();
        out.push_back(':');
        if (indent >= 0) out.push_back(' ');
        dump_rec(it.value(), out, indent, depth + 1);
      }
      newline(depth);
      out.push_back('}');
      break;
    }
    default:
      throw Error("unsupported json value type");
  }
}

}  // namespace

std::string canonical_dump(const json& j, int indent) {
  std::string out;
  dump_rec(j, out, indent, 0);
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
  if (!out) throw Error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dpl
