#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>

#include "meco/fetch/result.hpp"

namespace meco::fetch {

struct FetchOptions {
  std::chrono::milliseconds timeout{15000};
  std::uint64_t max_bytes = 5ull * 1024 * 1024;
  std::size_t max_inflight = 16;
  std::string user_agent = "mecocir-fetcher/1.0";
};

// Anything that can turn a URL into extracted text. The session engine only
// sees this interface; tests substitute canned sources.
class DocumentSource {
 public:
  virtual ~DocumentSource() = default;
  virtual FetchResult fetch(const std::string& url, std::chrono::milliseconds timeout) = 0;
  virtual std::chrono::milliseconds default_timeout() const { return std::chrono::milliseconds{15000}; }
};

// Classifies a completed response. Pure: identical inputs give identical results.
FetchResult interpret_response(const std::string& url, int http_code, std::string_view content_type,
                               std::string_view body, std::uint64_t max_bytes);

// HTTP/HTTPS client. Failures are reported in FetchResult::status and never
// thrown. The whole call, including one retry after a network error, is
// bounded by the timeout.
class HttpFetcher final : public DocumentSource {
 public:
  explicit HttpFetcher(FetchOptions options = {});

  FetchResult fetch(const std::string& url, std::chrono::milliseconds timeout) override;
  FetchResult fetch(const std::string& url) { return fetch(url, options_.timeout); }
  std::chrono::milliseconds default_timeout() const override { return options_.timeout; }

  const FetchOptions& options() const noexcept { return options_; }

 private:
  FetchResult attempt(const std::string& url, std::chrono::steady_clock::time_point deadline, bool& retryable);

  FetchOptions options_;
  std::counting_semaphore<> inflight_;
};

}  // namespace meco::fetch
