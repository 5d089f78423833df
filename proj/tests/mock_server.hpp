#pragma once

#include <httplib.h>
#include <json.hpp>

#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace activetest::testing {

/// Local chat-completions endpoint. `reply` maps (prompt, choice index) to
/// the generated text; `status_for` can force an HTTP status per request.
class MockServer {
 public:
  std::function<std::string(const std::string& prompt, int j)> reply = [](const std::string&, int) {
    return "The answer is A";
  };
  // Returns 200 to answer normally. Called with the prompt and the 0-based
  // attempt number for that prompt.
  std::function<int(const std::string& prompt, int attempt)> status_for = [](const std::string&, int) { return 200; };
  // Caps the number of choices returned, regardless of n.
  int max_choices = 1 << 20;

  MockServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      const auto prompt = body["messages"][0]["content"].get<std::string>();
      int attempt = 0;
      {
        std::lock_guard lock(mu_);
        bodies_.push_back(req.body);
        auth_.push_back(req.get_header_value("Authorization"));
        attempt = attempts_[prompt]++;
      }
      const int status = status_for(prompt, attempt);
      if (status != 200) {
        res.status = status;
        res.set_content(R"({"error":"mock"})", "application/json");
        return;
      }
      const int n = std::min(body.value("n", 1), max_choices);
      nlohmann::json choices = nlohmann::json::array();
      for (int j = 0; j < n; ++j) {
        int served = 0;
        {
          std::lock_guard lock(mu_);
          served = completions_[prompt]++;
        }
        choices.push_back({{"index", j}, {"message", {{"role", "assistant"}, {"content", reply(prompt, served)}}}});
      }
      res.set_content(nlohmann::json{{"choices", choices}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::vector<std::string> bodies() const {
    std::lock_guard lock(mu_);
    return bodies_;
  }
  std::vector<std::string> auth_headers() const {
    std::lock_guard lock(mu_);
    return auth_;
  }
  // Number of HTTP requests that carried `prompt`.
  int requests_for(const std::string& prompt) const {
    std::lock_guard lock(mu_);
    auto it = attempts_.find(prompt);
    return it == attempts_.end() ? 0 : it->second;
  }
  // Number of completions served for `prompt`.
  int completions_for(const std::string& prompt) const {
    std::lock_guard lock(mu_);
    auto it = completions_.find(prompt);
    return it == completions_.end() ? 0 : it->second;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<std::string> bodies_;
  std::vector<std::string> auth_;
  std::map<std::string, int> attempts_;
  std::map<std::string, int> completions_;
};

}  // namespace activetest::testing
