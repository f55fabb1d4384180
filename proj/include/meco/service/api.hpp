#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "meco/core/error.hpp"
#include "meco/repository/repository.hpp"
#include "meco/session/session_engine.hpp"

namespace meco::service {

// Requests carry the raw target ("/search?q=cassava"); header names are
// matched case-insensitively.
struct HttpRequest {
  std::string method;
  std::string target;
  std::map<std::string, std::string> headers;
  std::string body;

  std::optional<std::string> header(std::string_view name) const;
};

struct HttpResponse {
  int status = 200;
  nlohmann::json body = nlohmann::json::object();
};

inline constexpr std::string_view kUserHeader = "X-User-Id";

struct ApiOptions {
  repository::RecommendOptions recommend;
  std::size_t default_search_limit = 10;
  std::size_t max_search_limit = 100;
  std::size_t default_collaborators = 5;
};

// Percent-decoding of one path segment or query component; '+' is a space
// only in query components. Returns nullopt on a malformed escape.
std::optional<std::string> url_decode(std::string_view text, bool query_component);

struct Target {
  std::vector<std::string> segments;
  std::map<std::string, std::string> query;
};
std::optional<Target> parse_target(std::string_view target);

// Maps error codes onto HTTP statuses.
int status_for(ErrorCode code) noexcept;

// The JSON endpoints. Stateless apart from the components it delegates to,
// so handle() may be called from any number of threads.
class Api {
 public:
  Api(repository::Repository& repo, session::SessionEngine& sessions, ApiOptions options = {});

  HttpResponse handle(const HttpRequest& request);

 private:
  HttpResponse route(const HttpRequest& request, const Target& target);

  HttpResponse create_workspace(const HttpRequest& request);
  HttpResponse get_workspace(const WorkspaceId& ws);
  HttpResponse create_problem(const HttpRequest& request, const WorkspaceId& ws);
  HttpResponse get_problem(const ProblemId& id);
  HttpResponse revise_problem(const HttpRequest& request, const ProblemId& id);
  HttpResponse add_sub_problem(const HttpRequest& request, const ProblemId& id);
  HttpResponse annotate(const HttpRequest& request);
  HttpResponse reports(const ProblemId& id);
  HttpResponse search(const Target& target);
  HttpResponse collaborators(const ProblemId& id, const Target& target);
  HttpResponse history(const HttpRequest& request, const WorkspaceId& ws);
  HttpResponse get_document(const DocumentId& id);
  HttpResponse document_extra(const HttpRequest& request, const DocumentId& id, std::string_view what);

  repository::Repository& repo_;
  session::SessionEngine& sessions_;
  ApiOptions options_;
};

}  // namespace meco::service
