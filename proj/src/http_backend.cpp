// Live transport. Kept in its own translation unit because httplib.h is
// heavy to compile.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>

#include "json.hpp"
#include "stancebench/model_gateway.hpp"

namespace stancebench {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  const auto path_start = endpoint.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = endpoint.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : endpoint.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  if (path.size() >= 17 && path.compare(path.size() - 17, 17, "/chat/completions") == 0) {
    out.path = path;
  } else if (path.size() >= 3 && path.compare(path.size() - 3, 3, "/v1") == 0) {
    out.path = path + "/chat/completions";
  } else {
    out.path = path + "/v1/chat/completions";
  }
  return out;
}

}  // namespace

std::string HttpBackend::request_body(const ModelSpec& model, const Conversation& conversation) {
  json messages = json::array();
  for (const auto& m : conversation) messages.push_back({{"role", m.role}, {"content", m.content}});
  return json{{"model", model.name},
              {"messages", std::move(messages)},
              {"temperature", model.temperature},
              {"max_tokens", model.max_tokens}}
      .dump();
}

std::string HttpBackend::response_content(std::string_view body, int status) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded())
    throw GatewayError(ErrorCode::HttpError, "response body is not JSON", status);
  try {
    const json& content = doc.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw GatewayError(ErrorCode::HttpError, std::string("unexpected response shape: ") + e.what(), status);
  }
}

std::string HttpBackend::send(const ModelSpec& model, const Conversation& conversation) {
  const SplitUrl url = split_endpoint(model.endpoint);
  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration<double>(model.request_timeout);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  if (!model.api_key_env.empty()) {
    if (const char* key = std::getenv(model.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  auto res = client.Post(url.path, headers, request_body(model, conversation), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
      throw GatewayError(ErrorCode::Timeout, model.name + ": " + httplib::to_string(err));
    throw GatewayError(ErrorCode::HttpError, model.name + ": " + httplib::to_string(err));
  }
  if (res->status == 429)
    throw GatewayError(ErrorCode::RateLimited, model.name + ": rate limited", res->status);
  if (res->status < 200 || res->status >= 300)
    throw GatewayError(ErrorCode::HttpError, model.name + ": HTTP " + std::to_string(res->status),
                       res->status);
  return response_content(res->body, res->status);
}

}  // namespace stancebench
