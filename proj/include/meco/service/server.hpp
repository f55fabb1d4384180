#pragma once

#include <memory>

#include "meco/fetch/fetcher.hpp"
#include "meco/repository/repository.hpp"
#include "meco/service/api.hpp"
#include "meco/service/config.hpp"
#include "meco/session/session_engine.hpp"

namespace meco::service {

// The running service: repository, fetcher, session engine and API bound to
// an HTTP listener that also upgrades /ws/{workspace}?user= to WebSocket.
class Server {
 public:
  // `source` replaces the HTTP fetcher when given (tests).
  explicit Server(ServiceConfig config, std::unique_ptr<fetch::DocumentSource> source = nullptr,
                  Clock clock = system_clock());
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds the listen address and starts the io and worker threads. Returns
  // the bound port, which differs from the configured one when that is 0.
  unsigned short start();
  // Stops accepting, drops connections, joins threads and writes snapshots.
  // Idempotent.
  void stop();

  unsigned short port() const noexcept;
  const ServiceConfig& config() const noexcept;
  repository::Repository& repository() noexcept;
  session::SessionEngine& sessions() noexcept;
  Api& api() noexcept;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace meco::service
