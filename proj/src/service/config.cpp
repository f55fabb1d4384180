#include "meco/service/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "meco/core/error.hpp"
#include "meco/core/text.hpp"

namespace meco::service {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::invalid_argument, where + ": " + what);
}

double parse_double(const std::string& where, std::string_view v) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    bad(where, "expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t parse_uint(const std::string& where, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    bad(where, "expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

// Byte counts accept K/M/G suffixes (binary multiples).
std::uint64_t parse_bytes(const std::string& where, std::string_view v) {
  std::uint64_t scale = 1;
  if (!v.empty()) {
    switch (std::toupper(static_cast<unsigned char>(v.back()))) {
      case 'K': scale = 1ull << 10; break;
      case 'M': scale = 1ull << 20; break;
      case 'G': scale = 1ull << 30; break;
      default: break;
    }
    if (scale != 1) {
      v.remove_suffix(1);
    }
  }
  return parse_uint(where, v) * scale;
}

// "250ms", "15s", "2m"; a bare number means seconds.
std::chrono::milliseconds parse_duration(const std::string& where, std::string_view v) {
  double factor = 1000;
  if (v.ends_with("ms")) {
    factor = 1;
    v.remove_suffix(2);
  } else if (v.ends_with("s")) {
    v.remove_suffix(1);
  } else if (v.ends_with("m")) {
    factor = 60000;
    v.remove_suffix(1);
  }
  auto n = parse_double(where, v);
  if (n < 0) {
    bad(where, "duration is negative");
  }
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(n * factor)));
}

void apply(ServiceConfig& c, const std::string& key, const std::string& value, const std::string& where) {
  if (key == "listen_address") {
    split_listen_address(value);
    c.listen_address = value;
  } else if (key == "data_dir") {
    if (value.empty()) bad(where, "data_dir is empty");
    c.data_dir = value;
  } else if (key == "similarity.weight.keywords") {
    c.weights.keywords = parse_double(where, value);
  } else if (key == "similarity.weight.domains") {
    c.weights.domains = parse_double(where, value);
  } else if (key == "similarity.weight.indicators") {
    c.weights.indicators = parse_double(where, value);
  } else if (key == "similarity.weight.text") {
    c.weights.text = parse_double(where, value);
  } else if (key == "similarity.threshold") {
    c.threshold = parse_double(where, value);
  } else if (key == "fetch.timeout") {
    c.fetch.timeout = parse_duration(where, value);
  } else if (key == "fetch.max_bytes") {
    c.fetch.max_bytes = parse_bytes(where, value);
  } else if (key == "fetch.max_inflight") {
    c.fetch.max_inflight = parse_uint(where, value);
  } else if (key == "session.heartbeat_timeout") {
    c.heartbeat_timeout = parse_duration(where, value);
  } else if (key == "session.query_capacity") {
    c.query_capacity = parse_uint(where, value);
  } else if (key == "storage.sync") {
    if (value == "fsync") {
      c.sync = repository::SyncMode::fsync;
    } else if (value == "flush") {
      c.sync = repository::SyncMode::flush;
    } else {
      bad(where, "storage.sync must be fsync or flush");
    }
  } else if (key == "storage.snapshot_every") {
    c.snapshot_every = parse_uint(where, value);
  } else if (key == "server.io_threads") {
    c.io_threads = parse_uint(where, value);
  } else if (key == "server.worker_threads") {
    c.worker_threads = parse_uint(where, value);
  } else {
    bad(where, "unknown key '" + key + "'");
  }
}

}  // namespace

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) {
      return std::string(v);
    }
    return std::nullopt;
  };
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "listen_address",          "data_dir",
      "similarity.weight.keywords", "similarity.weight.domains",
      "similarity.weight.indicators", "similarity.weight.text",
      "similarity.threshold",    "fetch.timeout",
      "fetch.max_bytes",         "fetch.max_inflight",
      "session.heartbeat_timeout", "session.query_capacity",
      "storage.sync",            "storage.snapshot_every",
      "server.io_threads",       "server.worker_threads",
  };
  return keys;
}

std::string env_name(std::string_view key) {
  std::string out = "MECO_";
  for (char c : key) {
    out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

ServiceConfig parse_config(std::string_view text, const EnvLookup& env) {
  ServiceConfig config;
  std::istringstream in{std::string(text)};
  std::string raw;
  for (int n = 1; std::getline(in, raw); ++n) {
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') {
      continue;
    }
    auto eq = line.find('=');
    auto where = "line " + std::to_string(n);
    if (eq == std::string::npos) {
      bad(where, "expected key=value");
    }
    apply(config, std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), where);
  }
  if (env) {
    for (const auto& key : config_keys()) {
      auto name = env_name(key);
      if (auto value = env(name)) {
        apply(config, key, std::string(trim(*value)), name);
      }
    }
  }
  validate(config);
  return config;
}

ServiceConfig load_config(const std::filesystem::path& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::invalid_argument, "cannot read config file " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), env);
}

void validate(const ServiceConfig& c) {
  if (!c.weights.valid()) {
    throw Error(ErrorCode::invalid_argument, "similarity weights must be non-negative and sum to 1");
  }
  if (!(c.threshold >= 0 && c.threshold <= 1)) {
    throw Error(ErrorCode::invalid_argument, "similarity.threshold must lie in [0, 1]");
  }
  if (c.fetch.timeout.count() <= 0 || c.fetch.max_bytes == 0 || c.fetch.max_inflight == 0) {
    throw Error(ErrorCode::invalid_argument, "fetch limits must be positive");
  }
  if (c.heartbeat_timeout.count() <= 0 || c.query_capacity == 0) {
    throw Error(ErrorCode::invalid_argument, "session limits must be positive");
  }
  if (c.io_threads == 0 || c.worker_threads == 0) {
    throw Error(ErrorCode::invalid_argument, "thread counts must be positive");
  }
  split_listen_address(c.listen_address);
}

std::pair<std::string, unsigned short> split_listen_address(std::string_view address) {
  auto colon = address.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(ErrorCode::invalid_argument, "listen_address must be host:port");
  }
  auto host = address.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') {
    host = host.substr(1, host.size() - 2);
  }
  auto port = parse_uint("listen_address", address.substr(colon + 1));
  if (port > 65535) {
    throw Error(ErrorCode::invalid_argument, "listen_address port out of range");
  }
  return {std::string(host), static_cast<unsigned short>(port)};
}

}  // namespace meco::service
