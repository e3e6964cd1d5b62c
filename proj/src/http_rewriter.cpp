#include "parafit/http_rewriter.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>
#include <thread>

#include "parafit/error.hpp"

namespace parafit {

HttpRewriter::HttpRewriter(HttpRewriterOptions options) : options_(std::move(options)) {
  const std::string& url = options_.url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::kInvalidArgument, "rewriter url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpRewriter::rewrite(const RewriterPrompt& prompt, std::uint64_t) {
  const nlohmann::json body = {
      {"prompt", prompt.rendered_text}, {"temperature", options_.temperature}, {"top_p", options_.top_p}};
  const std::string payload = body.dump();

  std::string last_error;
  auto delay = options_.backoff;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    httplib::Client client(origin_);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    auto res = client.Post(path_, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = fmt::format("status {}", res->status);
      continue;
    }
    const auto reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
      last_error = "reply has no string field 'text'";
      continue;
    }
    return reply["text"].get<std::string>();
  }
  throw Error(ErrorKind::kRewriteFailed, "rewriter request failed: " + last_error);
}

}  // namespace parafit
