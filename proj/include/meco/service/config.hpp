#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "meco/fetch/fetcher.hpp"
#include "meco/repository/event_log.hpp"
#include "meco/repository/similarity.hpp"

namespace meco::service {

struct ServiceConfig {
  std::string listen_address = "127.0.0.1:8080";
  std::filesystem::path data_dir = "data";
  repository::SimilarityWeights weights;
  double threshold = 0.2;
  fetch::FetchOptions fetch;
  std::chrono::milliseconds heartbeat_timeout{30000};
  std::size_t query_capacity = 50;
  repository::SyncMode sync = repository::SyncMode::fsync;
  std::size_t snapshot_every = 100;
  std::size_t io_threads = 2;
  std::size_t worker_threads = 4;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_env();

// Every recognized key, in documentation order.
const std::vector<std::string>& config_keys();

// "fetch.timeout" -> "MECO_FETCH_TIMEOUT".
std::string env_name(std::string_view key);

// Flat key=value lines; '#' starts a comment line. Environment values
// override the file. Unknown keys and malformed values throw
// Error(invalid_argument) naming the line or variable.
ServiceConfig parse_config(std::string_view text, const EnvLookup& env);
ServiceConfig load_config(const std::filesystem::path& path, const EnvLookup& env);

// Weights sum to 1, threshold in [0,1], positive limits. Throws invalid_argument.
void validate(const ServiceConfig& config);

// Splits "host:port". Throws invalid_argument.
std::pair<std::string, unsigned short> split_listen_address(std::string_view address);

}  // namespace meco::service
