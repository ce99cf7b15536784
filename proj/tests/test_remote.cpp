#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <thread>

#include "invertext/remote_encoder.hpp"

using namespace invertext;

namespace {

// Single-endpoint mock embedding server with a scriptable handler.
struct MockServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit MockServer(httplib::Server::Handler handler) {
    server.Post("/v1/embeddings", std::move(handler));
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~MockServer() {
    server.stop();
    thread.join();
  }
};

}  // namespace

TEST_CASE("pass-through: the service vector is returned verbatim") {
  MockServer mock([](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    CHECK(body.at("input") == "hello");
    CHECK(body.at("model") == "toy-remote");
    res.set_content(R"({"data":[{"embedding":[0,0,0,1]}]})", "application/json");
  });
  RemoteEncoder enc("127.0.0.1", mock.port, "/v1/embeddings", "toy-remote");
  Embedding e = enc.encode("hello");
  REQUIRE(e.size() == 4);
  CHECK(e[0] == 0.0f);
  CHECK(e[3] == 1.0f);  // no normalization applied
  CHECK(enc.dim() == 4);
}

TEST_CASE("429 then 200: success after retry") {
  std::atomic<int> calls{0};
  MockServer mock([&](const httplib::Request&, httplib::Response& res) {
    if (calls++ == 0) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
    } else {
      res.set_content(R"({"embedding":[1,2]})", "application/json");
    }
  });
  RemoteEncoder enc("127.0.0.1", mock.port, "/v1/embeddings", "m", 3, 1);
  Embedding e = enc.encode("x");
  REQUIRE(e.size() == 2);
  CHECK(e[1] == 2.0f);
  CHECK(calls == 2);
}

TEST_CASE("persistent 500s exhaust retries") {
  std::atomic<int> calls{0};
  MockServer mock([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 503;
  });
  RemoteEncoder enc("127.0.0.1", mock.port, "/v1/embeddings", "m", 3, 1);
  CHECK_THROWS_AS(enc.encode("x"), RemoteEncoderError);
  CHECK(calls == 3);
}

TEST_CASE("non-retryable status surfaces as a typed error") {
  std::atomic<int> calls{0};
  MockServer mock([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 404;
  });
  RemoteEncoder enc("127.0.0.1", mock.port, "/v1/embeddings", "m", 3, 1);
  try {
    enc.encode("x");
    FAIL("expected RemoteEncoderError");
  } catch (const RemoteEncoderError& e) {
    CHECK(e.status == 404);
  }
  CHECK(calls == 1);  // no retry on client errors
}

TEST_CASE("dimension drift on a later call is an error") {
  std::atomic<int> calls{0};
  MockServer mock([&](const httplib::Request&, httplib::Response& res) {
    if (calls++ == 0)
      res.set_content(R"({"embedding":[1,2,3]})", "application/json");
    else
      res.set_content(R"({"embedding":[1,2]})", "application/json");
  });
  RemoteEncoder enc("127.0.0.1", mock.port, "/v1/embeddings", "m", 3, 1);
  CHECK(enc.encode("a").size() == 3);
  CHECK_THROWS_WITH_AS(enc.encode("b"), "dimension mismatch", std::runtime_error);
}

TEST_CASE("out-of-range numbers are rejected as malformed, not silently clamped") {
  // JSON cannot transport a non-finite double: 1e999 fails at parse time, so
  // it surfaces as a malformed-body transport error (the in-band finiteness
  // check stays as defense in depth).
  MockServer mock([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"embedding":[1e999,0]})", "application/json");
  });
  RemoteEncoder enc("127.0.0.1", mock.port, "/v1/embeddings", "m", 3, 1);
  try {
    enc.encode("a");
    FAIL("expected RemoteEncoderError");
  } catch (const RemoteEncoderError& e) {
    CHECK(e.status == 0);
  }
}

TEST_CASE("response without a numeric array is an error") {
  MockServer mock([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"data":"none"})", "application/json");
  });
  RemoteEncoder enc("127.0.0.1", mock.port, "/v1/embeddings", "m", 3, 1);
  CHECK_THROWS_AS(enc.encode("a"), RemoteEncoderError);
}

TEST_CASE("credential is taken from the environment and sent as a bearer token") {
  setenv("INVERTEXT_API_KEY", "sekret-test-token", 1);
  std::string seen_auth;
  MockServer mock([&](const httplib::Request& req, httplib::Response& res) {
    auto it = req.headers.find("Authorization");
    if (it != req.headers.end()) seen_auth = it->second;
    res.set_content(R"({"embedding":[1]})", "application/json");
  });
  RemoteEncoder enc("127.0.0.1", mock.port, "/v1/embeddings", "m", 3, 1);
  enc.encode("a");
  CHECK(seen_auth == "Bearer sekret-test-token");
  unsetenv("INVERTEXT_API_KEY");
}

TEST_CASE("transport failure to a dead port is retried then raised") {
  RemoteEncoder enc("127.0.0.1", 1, "/v1/embeddings", "m", 2, 1);
  try {
    enc.encode("a");
    FAIL("expected RemoteEncoderError");
  } catch (const RemoteEncoderError& e) {
    CHECK(e.status == 0);
  }
}
