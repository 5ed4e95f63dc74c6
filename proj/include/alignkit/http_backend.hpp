#pragma once

#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "alignkit/backend.hpp"
#include "alignkit/errors.hpp"

namespace alignkit {

/// Client for a model server speaking the engine's small JSON protocol:
///   POST /v1/complete       {checkpoint, prompt, temperature, top_p,
///                            max_tokens, seed, request_key} -> {text}
///   POST /v1/score_options  {checkpoint, prompt, options, request_key}
///                           -> {logprobs}
///   POST /v1/embed          {text} -> {embedding}
///
/// Connection failures and 5xx responses are retryable; 501 means the server
/// cannot score fixed options; 404 means an unknown checkpoint.
class HttpBackend : public Backend {
 public:
  HttpBackend(std::string endpoint, BackendLimits limits)
      : endpoint_(std::move(endpoint)), limits_(limits) {}

  CompletionResult complete(const CompletionRequest& req) override {
    const json body{{"checkpoint", req.checkpoint},
                    {"prompt", req.prompt},
                    {"temperature", req.sampling.temperature},
                    {"top_p", req.sampling.top_p},
                    {"max_tokens", req.sampling.max_tokens},
                    {"seed", req.sampling.seed},
                    {"request_key", req.request_key}};
    const json reply = post("/v1/complete", body);
    return {reply.at("text").get<std::string>()};
  }

  OptionScoreResult score_options(const OptionScoreRequest& req) override {
    const json body{{"checkpoint", req.checkpoint},
                    {"prompt", req.prompt},
                    {"options", req.options},
                    {"request_key", req.request_key}};
    const json reply = post("/v1/score_options", body);
    OptionScoreResult res{reply.at("logprobs").get<std::vector<double>>()};
    if (res.logprobs.size() != req.options.size()) {
      throw BackendError("server returned " + std::to_string(res.logprobs.size()) +
                         " logprobs for " + std::to_string(req.options.size()) + " options");
    }
    return res;
  }

  std::vector<double> embed(const std::string& text) override {
    const json reply = post("/v1/embed", json{{"text", text}});
    return reply.at("embedding").get<std::vector<double>>();
  }

 private:
  json post(const std::string& path, const json& body) {
    // One connection per call; the dispatcher may issue these concurrently.
    httplib::Client cli(endpoint_);
    cli.set_connection_timeout(0, limits_.timeout_ms * 1000LL);
    cli.set_read_timeout(limits_.timeout_ms / 1000, (limits_.timeout_ms % 1000) * 1000);
    cli.set_write_timeout(limits_.timeout_ms / 1000, (limits_.timeout_ms % 1000) * 1000);

    auto res = cli.Post(path, body.dump(), "application/json");
    if (!res) {
      throw TransientError("backend unreachable: " + endpoint_ + path + " (" +
                           httplib::to_string(res.error()) + ")");
    }
    if (res->status == 501) throw CapabilityError(error_text(*res, path));
    if (res->status == 404) throw ConfigError(error_text(*res, path));
    if (res->status >= 500) throw TransientError(error_text(*res, path));
    if (res->status != 200) throw BackendError(error_text(*res, path));

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) {
      throw BackendError("backend returned malformed JSON from " + path);
    }
    return reply;
  }

  static std::string error_text(const httplib::Response& res, const std::string& path) {
    std::string msg = "backend " + path + " returned " + std::to_string(res.status);
    json body = json::parse(res.body, nullptr, false);
    if (body.is_object() && body.contains("error")) {
      msg += ": " + body["error"].get<std::string>();
    }
    return msg;
  }

  std::string endpoint_;
  BackendLimits limits_;
};

/// Serves any Backend over the JSON protocol above. Used to exercise the HTTP
/// client against real handler code without an external process.
class BackendServer {
 public:
  explicit BackendServer(Backend& backend) : backend_(backend) {
    server_.Post("/v1/complete", [this](const httplib::Request& rq, httplib::Response& rs) {
      handle(rq, rs, [this](const json& j) {
        CompletionRequest req;
        req.checkpoint = j.at("checkpoint").get<std::string>();
        req.prompt = j.at("prompt").get<std::string>();
        req.sampling.temperature = j.value("temperature", 1.0);
        req.sampling.top_p = j.value("top_p", 0.9);
        req.sampling.max_tokens = j.value("max_tokens", 256);
        req.sampling.seed = j.value("seed", std::uint64_t{0});
        req.request_key = j.value("request_key", "");
        return json{{"text", backend_.complete(req).text}};
      });
    });
    server_.Post("/v1/score_options", [this](const httplib::Request& rq, httplib::Response& rs) {
      handle(rq, rs, [this](const json& j) {
        OptionScoreRequest req;
        req.checkpoint = j.at("checkpoint").get<std::string>();
        req.prompt = j.at("prompt").get<std::string>();
        req.options = j.at("options").get<std::vector<std::string>>();
        req.request_key = j.value("request_key", "");
        return json{{"logprobs", backend_.score_options(req).logprobs}};
      });
    });
    server_.Post("/v1/embed", [this](const httplib::Request& rq, httplib::Response& rs) {
      handle(rq, rs, [this](const json& j) {
        return json{{"embedding", backend_.embed(j.at("text").get<std::string>())}};
      });
    });
  }

  ~BackendServer() { stop(); }

  /// Binds an ephemeral port and serves until stop(). Returns the endpoint.
  std::string start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw BackendError("cannot bind test server port");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return "http://127.0.0.1:" + std::to_string(port_);
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

 private:
  template <class Fn>
  void handle(const httplib::Request& rq, httplib::Response& rs, Fn&& fn) {
    json body = json::parse(rq.body, nullptr, false);
    if (body.is_discarded()) {
      rs.status = 400;
      rs.set_content(json{{"error", "malformed JSON body"}}.dump(), "application/json");
      return;
    }
    try {
      rs.set_content(fn(body).dump(), "application/json");
    } catch (const CapabilityError& e) {
      fail(rs, 501, e.what());
    } catch (const ConfigError& e) {
      fail(rs, 404, e.what());
    } catch (const TransientError& e) {
      fail(rs, 503, e.what());
    } catch (const std::exception& e) {
      fail(rs, 500, e.what());
    }
  }

  static void fail(httplib::Response& rs, int status, const std::string& msg) {
    rs.status = status;
    rs.set_content(json{{"error", msg}}.dump(), "application/json");
  }

  Backend& backend_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace alignkit
