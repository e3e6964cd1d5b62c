#pragma once

#include <chrono>
#include <string>

#include "parafit/paragen.hpp"

namespace parafit {

struct HttpRewriterOptions {
  std::string url;  // http://host[:port]/path
  std::chrono::milliseconds timeout{30000};
  int retries = 3;
  std::chrono::milliseconds backoff{200};  // doubled after each failed attempt
  double temperature = 1.0;
  double top_p = 0.1;
};

// POSTs {"prompt", "temperature", "top_p"} and reads {"text"} from the reply.
// Non-2xx status, transport failure, or a missing "text" field count as a
// failed attempt; after `retries` retries rewrite() throws kRewriteFailed.
class HttpRewriter final : public Rewriter {
 public:
  explicit HttpRewriter(HttpRewriterOptions options);
  std::string rewrite(const RewriterPrompt& prompt, std::uint64_t seed) override;
  bool concurrent() const override { return true; }

 private:
  HttpRewriterOptions options_;
  std::string origin_;
  std::string path_;
};

}  // namespace parafit
