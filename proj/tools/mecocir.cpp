#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/signal_set.hpp>
#include <spdlog/spdlog.h>

#include "meco/core/error.hpp"
#include "meco/service/admin.hpp"
#include "meco/service/config.hpp"
#include "meco/service/server.hpp"

namespace {

constexpr int kBadArgs = 1;
constexpr int kVerifyFailed = 2;

int serve(const std::string& config_path) {
  auto config = meco::service::load_config(config_path, meco::service::process_env());
  meco::service::Server server(config);
  server.start();
  boost::asio::io_context signals_ctx;
  boost::asio::signal_set signals(signals_ctx, SIGINT, SIGTERM);
  signals.async_wait([](const boost::system::error_code&, int sig) { spdlog::info("signal {}, stopping", sig); });
  signals_ctx.run();
  server.stop();
  return 0;
}

int inspect(const std::string& data_dir, const std::string& workspace) {
  try {
    auto summary = meco::service::inspect_workspace(data_dir, meco::WorkspaceId(workspace));
    std::cout << meco::service::format_summary(summary);
    return 0;
  } catch (const meco::Error& e) {
    std::cerr << "inspect: " << e.what() << '\n';
    return e.code() == meco::ErrorCode::corrupt_log ? kVerifyFailed : kBadArgs;
  }
}

int verify(const std::string& data_dir) {
  auto report = meco::service::verify_data_dir(data_dir);
  for (const auto& issue : report.issues) {
    std::cout << "FAIL " << issue.workspace.str() << ": " << issue.message;
    if (issue.offset) {
      std::cout << " at offset " << *issue.offset;
    }
    std::cout << '\n';
  }
  std::cout << (report.ok() ? "ok" : "corrupt") << ": " << report.workspaces << " workspaces, " << report.events
            << " events\n";
  return report.ok() ? 0 : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mecocir: collaborative information-retrieval service"};
  app.require_subcommand(1);

  std::string config_path;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP and real-time service");
  serve_cmd->add_option("--config", config_path, "key=value configuration file")->required();

  std::string data_dir;
  std::string workspace;
  auto* inspect_cmd = app.add_subcommand("inspect", "summarize one workspace by replaying its log");
  inspect_cmd->add_option("data_dir", data_dir)->required();
  inspect_cmd->add_option("workspace", workspace)->required();

  auto* verify_cmd = app.add_subcommand("verify", "replay every log and check snapshots");
  verify_cmd->add_option("data_dir", data_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    auto code = app.exit(e);
    return code == 0 ? 0 : kBadArgs;
  }

  try {
    if (*serve_cmd) {
      return serve(config_path);
    }
    if (*inspect_cmd) {
      return inspect(data_dir, workspace);
    }
    return verify(data_dir);
  } catch (const meco::Error& e) {
    std::cerr << "mecocir: " << e.what() << '\n';
    return kBadArgs;
  } catch (const std::exception& e) {
    std::cerr << "mecocir: " << e.what() << '\n';
    return kBadArgs;
  }
}
