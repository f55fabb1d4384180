#pragma once

#include <stdlib.h>

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "meco/core/error.hpp"
#include "meco/core/time.hpp"
#include "meco/fetch/fetcher.hpp"
#include "meco/repository/repository.hpp"
#include "meco/session/session_engine.hpp"

namespace meco::test {

class TempDir {
 public:
  TempDir() {
    auto pattern = (std::filesystem::temp_directory_path() / "meco-test-XXXXXX").string();
    if (!mkdtemp(pattern.data())) {
      throw std::runtime_error("mkdtemp failed");
    }
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Code of the meco::Error thrown by f, or nullopt if it did not throw one.
template <typename F>
std::optional<ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline Timestamp t0() { return Timestamp(std::chrono::milliseconds(1'760'000'000'000)); }

// A repository under a temp dir with a hand-driven clock and predictable ids.
struct RepoFixture {
  TempDir dir;
  ManualClock clock{t0()};
  repository::RepositoryOptions options;
  std::unique_ptr<repository::Repository> repo;

  explicit RepoFixture(repository::SyncMode sync = repository::SyncMode::flush) {
    options.data_dir = dir.path();
    options.store.sync = sync;
    open();
  }

  void open() { repo = std::make_unique<repository::Repository>(options, clock.clock(), sequential_id_source()); }
  // Simulates a restart: the old instance is gone before the new one reads.
  void reopen() {
    repo.reset();
    open();
  }
  repository::Repository& operator*() { return *repo; }
  repository::Repository* operator->() { return repo.get(); }
};

// Serves prepared results; unknown URLs fail like an unreachable host.
class CannedSource final : public fetch::DocumentSource {
 public:
  void page(const std::string& url, std::string title, std::string text) {
    std::lock_guard lock(mu_);
    fetch::FetchResult r;
    r.url = url;
    r.status = fetch::FetchStatus::ok;
    r.http_code = 200;
    r.title = std::move(title);
    r.text = std::move(text);
    r.byte_size = r.text.size();
    pages_[url] = std::move(r);
  }

  fetch::FetchResult fetch(const std::string& url, std::chrono::milliseconds) override {
    ++calls;
    std::lock_guard lock(mu_);
    if (auto it = pages_.find(url); it != pages_.end()) {
      return it->second;
    }
    fetch::FetchResult r;
    r.url = url;
    r.status = fetch::FetchStatus::network_error;
    r.detail = "unreachable";
    return r;
  }

  std::atomic<int> calls{0};

 private:
  std::mutex mu_;
  std::map<std::string, fetch::FetchResult> pages_;
};

// Records everything the engine pushes. `refuse` simulates a full queue.
class Recorder final : public session::Subscriber {
 public:
  bool deliver(const session::ServerMessage& message) override {
    if (refuse) {
      return false;
    }
    std::lock_guard lock(mu_);
    messages_.push_back(message);
    return true;
  }

  void close(std::string_view reason) override {
    std::lock_guard lock(mu_);
    closed_ = true;
    reason_ = reason;
  }

  std::vector<session::ServerMessage> messages() const {
    std::lock_guard lock(mu_);
    return messages_;
  }

  std::vector<session::AwarenessUpdate> updates() const {
    std::vector<session::AwarenessUpdate> out;
    for (const auto& m : messages()) {
      if (const auto* u = std::get_if<session::UpdateMessage>(&m)) {
        out.push_back(u->update);
      }
    }
    return out;
  }

  std::vector<Seq> activity_seqs() const {
    std::vector<Seq> out;
    for (const auto& u : updates()) {
      if (u.is_activity()) {
        out.push_back(u.seq);
      }
    }
    return out;
  }

  std::vector<session::ErrorMessage> errors() const {
    std::vector<session::ErrorMessage> out;
    for (const auto& m : messages()) {
      if (const auto* e = std::get_if<session::ErrorMessage>(&m)) {
        out.push_back(*e);
      }
    }
    return out;
  }

  std::optional<session::StateMessage> last_state() const {
    std::optional<session::StateMessage> out;
    for (const auto& m : messages()) {
      if (const auto* s = std::get_if<session::StateMessage>(&m)) {
        out = *s;
      }
    }
    return out;
  }

  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }
  std::string reason() const {
    std::lock_guard lock(mu_);
    return reason_;
  }

  std::atomic<bool> refuse{false};

 private:
  mutable std::mutex mu_;
  std::vector<session::ServerMessage> messages_;
  bool closed_ = false;
  std::string reason_;
};

}  // namespace meco::test
