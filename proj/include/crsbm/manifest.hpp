#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "crsbm/error.hpp"
#include "crsbm/serialize.hpp"
#include "crsbm/version.hpp"

namespace crsbm {

/// 64-bit FNV-1a over the file's bytes, as 16 lowercase hex digits.
inline std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::data, path + ": cannot open for reading");
  std::uint64_t h = 0xcbf29ce484222325ull;
  std::istreambuf_iterator<char> it(in), end;
  for (; it != end; ++it) {
    h ^= static_cast<unsigned char>(*it);
    h *= 0x100000001b3ull;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k, h >>= 4) out[static_cast<std::size_t>(k)] = digits[h & 0xf];
  return out;
}

/// UTC, second resolution, ISO 8601.
inline std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now()) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunManifest {
  std::string command;
  Json config = Json::object();
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string started = utc_timestamp();
  std::string finished;

  Json to_json() const {
    Json in = Json::array();
    for (const auto& p : inputs) in.push_back({{"path", p}, {"fnv1a64", fnv1a64_file(p)}});
    return {{"command", command}, {"config", config},   {"seeds", seeds},
            {"inputs", in},       {"outputs", outputs}, {"started", started},
            {"finished", finished}, {"version", kVersion}};
  }
};

inline void write_json(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::data, path + ": cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::data, path + ": write failed");
}

inline Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::data, path + ": cannot open for reading");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::data, path + ": " + e.what());
  }
}

}  // namespace crsbm
