#include "meco/fetch/fetcher.hpp"

#include <httplib.h>

#include "meco/core/text.hpp"
#include "meco/fetch/html.hpp"

namespace meco::fetch {

namespace {

enum class BodyKind { html, plain, unsupported };

BodyKind classify_content_type(std::string_view content_type, std::string_view body) {
  auto media = ascii_lower(trim(content_type.substr(0, content_type.find(';'))));
  if (media == "text/html" || media == "application/xhtml+xml") {
    return BodyKind::html;
  }
  if (media == "text/plain") {
    return BodyKind::plain;
  }
  if (media.empty()) {
    auto head = ascii_lower(body.substr(0, 512));
    return head.find("<html") != std::string::npos || head.find("<!doctype html") != std::string::npos
               ? BodyKind::html
               : BodyKind::plain;
  }
  return BodyKind::unsupported;
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // path + query, never empty
};

std::optional<SplitUrl> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    return std::nullopt;
  }
  auto scheme = ascii_lower(url.substr(0, scheme_end));
  if (scheme != "http" && scheme != "https") {
    return std::nullopt;
  }
  auto host_start = scheme_end + 3;
  auto path_start = url.find_first_of("/?#", host_start);
  SplitUrl out;
  out.origin = scheme + "://" + url.substr(host_start, path_start == std::string::npos ? std::string::npos
                                                                                        : path_start - host_start);
  std::string rest = path_start == std::string::npos ? "" : url.substr(path_start);
  if (auto hash = rest.find('#'); hash != std::string::npos) {
    rest.resize(hash);
  }
  if (rest.empty() || rest[0] != '/') {
    rest.insert(0, "/");
  }
  out.path = rest;
  return out;
}

FetchResult failure(const std::string& url, FetchStatus status, std::string detail, int code = 0) {
  FetchResult r;
  r.url = url;
  r.status = status;
  r.http_code = code;
  r.detail = std::move(detail);
  return r;
}

}  // namespace

FetchResult interpret_response(const std::string& url, int http_code, std::string_view content_type,
                               std::string_view body, std::uint64_t max_bytes) {
  if (http_code >= 400 || http_code < 100) {
    auto r = failure(url, FetchStatus::http_error, "HTTP " + std::to_string(http_code), http_code);
    r.byte_size = body.size();
    return r;
  }
  if (body.size() > max_bytes) {
    auto r = failure(url, FetchStatus::too_large, "body exceeds " + std::to_string(max_bytes) + " bytes", http_code);
    r.byte_size = body.size();
    return r;
  }
  FetchResult r;
  r.url = url;
  r.http_code = http_code;
  r.byte_size = body.size();
  switch (classify_content_type(content_type, body)) {
    case BodyKind::html: {
      auto extracted = extract_html(body);
      r.status = FetchStatus::ok;
      r.title = std::move(extracted.title);
      r.text = std::move(extracted.text);
      break;
    }
    case BodyKind::plain:
      r.status = FetchStatus::ok;
      r.text = std::string(body);
      break;
    case BodyKind::unsupported:
      r.status = FetchStatus::unsupported_type;
      r.detail = "content type " + std::string(content_type);
      break;
  }
  return r;
}

HttpFetcher::HttpFetcher(FetchOptions options)
    : options_(std::move(options)),
      inflight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(options_.max_inflight, 1))) {}

FetchResult HttpFetcher::fetch(const std::string& url, std::chrono::milliseconds timeout) {
  using clock = std::chrono::steady_clock;
  auto deadline = clock::now() + timeout;
  if (!split_url(url)) {
    return failure(url, FetchStatus::network_error, "not an absolute http(s) URL");
  }
  if (!inflight_.try_acquire_until(deadline)) {
    return failure(url, FetchStatus::network_error, "in-flight fetch limit reached");
  }
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{inflight_};

  bool retryable = false;
  auto result = attempt(url, deadline, retryable);
  if (retryable && clock::now() < deadline) {
    result = attempt(url, deadline, retryable);
  }
  return result;
}

FetchResult HttpFetcher::attempt(const std::string& url, std::chrono::steady_clock::time_point deadline,
                                 bool& retryable) {
  using namespace std::chrono;
  retryable = false;
  auto split = *split_url(url);
  auto remaining = duration_cast<microseconds>(deadline - steady_clock::now());
  if (remaining.count() <= 0) {
    return failure(url, FetchStatus::network_error, "timeout");
  }

  httplib::Client client(split.origin);
  if (!client.is_valid()) {
    return failure(url, FetchStatus::network_error, "cannot create client for " + split.origin);
  }
  auto secs = static_cast<time_t>(remaining.count() / 1000000);
  auto usecs = static_cast<time_t>(remaining.count() % 1000000);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  client.set_follow_location(true);
  client.set_keep_alive(false);

  httplib::Headers headers{{"User-Agent", options_.user_agent}, {"Accept", "text/html, text/plain;q=0.9"}};

  int status = 0;
  std::string content_type;
  std::string body;
  std::optional<FetchResult> early;  // decided before the body finished
  bool timed_out = false;

  auto on_response = [&](const httplib::Response& response) {
    status = response.status;
    content_type = response.get_header_value("Content-Type");
    if (status >= 400) {
      early = failure(url, FetchStatus::http_error, "HTTP " + std::to_string(status), status);
      return false;
    }
    if (response.has_header("Content-Length")) {
      auto length = response.get_header_value_u64("Content-Length");
      if (length > options_.max_bytes) {
        early = failure(url, FetchStatus::too_large, "declared length " + std::to_string(length), status);
        early->byte_size = length;
        return false;
      }
    }
    if (!content_type.empty() && classify_content_type(content_type, {}) == BodyKind::unsupported) {
      early = failure(url, FetchStatus::unsupported_type, "content type " + content_type, status);
      return false;
    }
    return true;
  };
  auto on_data = [&](const char* data, std::size_t size) {
    if (steady_clock::now() >= deadline) {
      timed_out = true;
      return false;
    }
    if (body.size() + size > options_.max_bytes) {
      early = failure(url, FetchStatus::too_large, "body exceeds " + std::to_string(options_.max_bytes) + " bytes",
                      status);
      early->byte_size = body.size() + size;
      return false;
    }
    body.append(data, size);
    return true;
  };

  auto res = client.Get(split.path, headers, on_response, on_data);
  if (early) {
    return *early;
  }
  if (timed_out) {
    return failure(url, FetchStatus::network_error, "timeout");
  }
  if (!res) {
    retryable = true;
    return failure(url, FetchStatus::network_error, httplib::to_string(res.error()));
  }
  return interpret_response(url, res->status, content_type, body, options_.max_bytes);
}

}  // namespace meco::fetch
