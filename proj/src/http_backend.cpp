#include "oocheck/http_backend.hpp"

#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "oocheck/digest.hpp"
#include "oocheck/text.hpp"

namespace oocheck::backend {

nlohmann::json build_completion_body(const CompletionRequest& request) {
  request.validate();
  auto messages = nlohmann::json::array();
  for (const auto& m : request.messages) {
    auto content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", m.text}});
    if (m.image) {
      if (is_url(*m.image))
        content.push_back({{"type", "image"}, {"url", *m.image}});
      else
        content.push_back({{"type", "image"}, {"data", base64_encode(read_image_bytes(*m.image))}});
    }
    messages.push_back({{"role", to_string(m.role)}, {"content", std::move(content)}});
  }
  return {{"model", request.model_id},
          {"messages", std::move(messages)},
          {"temperature", request.temperature},
          {"max_tokens", request.max_tokens}};
}

std::string extract_completion_text(const nlohmann::json& body, const std::string& pointer) {
  try {
    const auto& node = body.at(nlohmann::json::json_pointer(pointer));
    if (node.is_null()) return {};
    return node.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError("response has no completion text at " + pointer + ": " + e.what());
  }
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw PreconditionError("endpoint URL lacks a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

namespace detail {

nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body) {
  const auto [host, path] = split_url(endpoint.url);
  httplib::Headers headers;
  if (!endpoint.token_env.empty()) {
    const char* token = std::getenv(endpoint.token_env.c_str());
    if (token == nullptr || *token == '\0')
      throw PreconditionError("environment variable " + endpoint.token_env + " is not set");
    std::string value = endpoint.auth_scheme.empty() ? std::string(token) : endpoint.auth_scheme + " " + token;
    headers.emplace(endpoint.auth_header, std::move(value));
  }
  const auto payload = body.dump();

  auto attempt = [&]() -> nlohmann::json {
    httplib::Client client(host);
    client.set_connection_timeout(endpoint.timeout_seconds, 0);
    client.set_read_timeout(endpoint.timeout_seconds, 0);
    client.set_write_timeout(endpoint.timeout_seconds, 0);
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) throw TransportError("POST " + host + path + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) throw BackendRefused(res->status, res->body);
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed JSON response: ") + e.what());
    }
  };
  return with_retries(endpoint.retry, attempt, [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); });
}

}  // namespace detail

HttpCompletionBackend::HttpCompletionBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  split_url(endpoint_.url);
}

CompletionResponse HttpCompletionBackend::complete(const CompletionRequest& request) {
  auto body = build_completion_body(request);
  if (body["model"].get<std::string>().empty()) body["model"] = endpoint_.model;
  const auto start = std::chrono::steady_clock::now();
  ++calls_;
  auto response = detail::post_json(endpoint_, body);
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  return {extract_completion_text(response, endpoint_.response_path), endpoint_.id, false,
          static_cast<std::uint64_t>(elapsed.count())};
}

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  split_url(endpoint_.url);
  if (endpoint_.response_path == HttpEndpoint{}.response_path) endpoint_.response_path = "/data/0/embedding";
}

EmbeddingVector HttpEmbeddingBackend::embed(std::string_view input) {
  if (text::trim(input).empty()) throw EmptyText("cannot embed empty text");
  auto response = detail::post_json(endpoint_, {{"model", endpoint_.model}, {"input", input}});
  try {
    auto values = response.at(nlohmann::json::json_pointer(endpoint_.response_path)).get<std::vector<double>>();
    if (values.empty()) throw TransportError("embedding response is empty");
    return {std::move(values)};
  } catch (const nlohmann::json::exception& e) {
    throw TransportError("response has no embedding at " + endpoint_.response_path + ": " + e.what());
  }
}

HttpEntityClient::HttpEntityClient(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  split_url(endpoint_.url);
  if (endpoint_.response_path == HttpEndpoint{}.response_path) endpoint_.response_path = "/entities";
}

std::vector<DetectedEntity> HttpEntityClient::detect(const std::string& image) {
  nlohmann::json ref = is_url(image) ? nlohmann::json{{"url", image}}
                                     : nlohmann::json{{"data", base64_encode(read_image_bytes(image))}};
  auto response = detail::post_json(endpoint_, {{"model", endpoint_.model}, {"image", std::move(ref)}});
  std::vector<DetectedEntity> out;
  try {
    for (const auto& item : response.at(nlohmann::json::json_pointer(endpoint_.response_path)))
      out.push_back({item.at("name").get<std::string>(), item.value("score", 0.0)});
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed entity response: ") + e.what());
  }
  return out;
}

}  // namespace oocheck::backend
