#include <sys/stat.h>
#include <unistd.h>

#include <cstdio>
#include <future>
#include <thread>

#include "contractcheck/service.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "support.hpp"

using namespace contractcheck;
using nlohmann::json;

namespace {

// Runs a Service on an ephemeral port for the lifetime of the fixture.
struct TestServer {
  std::filesystem::path store;
  httplib::Server server;
  std::unique_ptr<Service> service;
  std::thread thread;
  int port = 0;

  explicit TestServer(SolverConfig solver = testing::solver_config()) {
    char tmpl[] = "/tmp/cc_store_XXXXXX";
    REQUIRE(mkdtemp(tmpl));
    store = tmpl;
    ServiceConfig config;
    config.store_dir = store;
    config.library_dir = testing::data_dir() / "library";
    config.solver = std::move(solver);
    service = std::make_unique<Service>(config);
    service->mount(server);
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~TestServer() {
    server.stop();
    thread.join();
    std::filesystem::remove_all(store);
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }
};

std::string run_cli(const std::string& args) {
  std::string out;
  FILE* p = popen((std::string(CONTRACTCHECK_CLI) + " " + args).c_str(), "r");
  REQUIRE(p);
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  pclose(p);
  return out;
}

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("health and library") {
    TestServer ts;
    auto c = ts.client();
    auto res = c.Get("/health");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body == "ok");
    CHECK(res->get_header_value("X-Schema-Version") == "1");

    res = c.Get("/library/blocks");
    REQUIRE(res);
    CHECK(res->status == 200);
    auto lib = json::parse(res->body);
    CHECK(lib["templates"].size() == 7);
    for (const auto& t : lib["templates"]) {
      CAPTURE(t["name"]);
      CHECK(t.contains("description"));
      CHECK_FALSE(t["blocks"].empty());
      CHECK_FALSE(t["parameters"].empty());
    }
  }

  TEST_CASE("contract lifecycle") {
    TestServer ts;
    auto c = ts.client();
    std::string doc = testing::fixture("bakery");
    auto res = c.Put("/contracts/bakery", doc, "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    res = c.Put("/contracts/bakery", doc, "application/json");
    CHECK(res->status == 200);
    res = c.Get("/contracts/bakery");
    CHECK(res->status == 200);
    CHECK(res->body == doc);

    res = c.Put("/contracts/broken", "[{\"ID\":\"B1\",\"Object\":[\"x:Banana\"]}]", "application/json");
    CHECK(res->status == 422);
    CHECK(json::parse(res->body)["findings"][0]["code"] == "PARSE_ERROR");

    CHECK(c.Get("/contracts/nothere")->status == 404);
    CHECK(c.Get("/contracts/bad.id")->status == 400);
    CHECK(c.Post("/contracts/nothere/analyze", "", "text/plain")->status == 404);
    CHECK(c.Post("/contracts/bakery/analyze?kinds=III", "", "text/plain")->status == 400);

    res = c.Delete("/contracts/bakery");
    CHECK(res->status == 200);
    CHECK(c.Get("/contracts/bakery")->status == 404);
    CHECK(c.Delete("/contracts/bakery")->status == 404);
  }

  TEST_CASE("analysis matches the command line byte for byte") {
    TestServer ts;
    auto c = ts.client();
    REQUIRE(c.Put("/contracts/bakery", testing::fixture("bakery"), "application/json")->status == 201);
    auto res = c.Post("/contracts/bakery/analyze", "", "text/plain");
    REQUIRE(res);
    CHECK(res->status == 200);
    std::string cli = run_cli("analyze --format json " + (testing::data_dir() / "bakery.json").string());
    CHECK(res->body + "\n" == cli);

    auto report = json::parse(res->body);
    bool found = false;
    for (const auto& f : report["flags"]) {
      if (f["target"] == "TransferClaim") {
        found = true;
        CHECK(f["blocks"] == json::array({"Block1", "Block11"}));
      }
    }
    CHECK(found);
    CHECK(report["blocks"]["Block11"].get<std::string>().find("Bank") != std::string::npos);

    res = c.Post("/contracts/bakery/analyze?kinds=limitation&timing=1", "", "text/plain");
    REQUIRE(res->status == 200);
    report = json::parse(res->body);
    CHECK(report["analyses"].size() == 2);
    CHECK(report["stats"].contains("solve_seconds"));
  }

  TEST_CASE("diagram endpoint") {
    TestServer ts;
    auto c = ts.client();
    REQUIRE(c.Put("/contracts/bakery", testing::fixture("bakery"), "application/json")->status == 201);
    auto res = c.Get("/contracts/bakery/diagram/execution__spa");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body.rfind("sequenceDiagram", 0) == 0);
    CHECK(c.Get("/contracts/bakery/diagram/II")->body == res->body);
    CHECK(c.Get("/contracts/bakery/diagram/unsat__PayClaim")->status == 404);
  }

  TEST_CASE("editing the owner clears the flag") {
    TestServer ts;
    auto c = ts.client();
    REQUIRE(c.Put("/contracts/k", testing::fixture("bakery"), "application/json")->status == 201);
    auto before = json::parse(c.Post("/contracts/k/analyze", "", "text/plain")->body);
    CHECK_FALSE(before["flags"].empty());
    REQUIRE(c.Put("/contracts/k", testing::fixture("bakery_clean"), "application/json")->status == 200);
    auto after = json::parse(c.Post("/contracts/k/analyze", "", "text/plain")->body);
    CHECK(after["flags"].empty());
  }

  TEST_CASE("static errors are reported with 422") {
    TestServer ts;
    auto c = ts.client();
    auto blocks = json::parse(testing::fixture("bakery"));
    blocks.erase(3);  // Block4 refers to the payment
    blocks.erase(1);  // Block2 holds the price
    REQUIRE(c.Put("/contracts/noprice", blocks.dump(), "application/json")->status == 201);
    auto res = c.Post("/contracts/noprice/analyze", "", "text/plain");
    CHECK(res->status == 422);
    auto body = json::parse(res->body);
    CHECK(body["findings"][0]["code"] == "ESSENTIALIA_PRICE");
    CHECK(body.contains("report"));
  }

  TEST_CASE("a second analysis of the same contract is rejected while one runs") {
    char tmpl[] = "/tmp/cc_slow_solver_XXXXXX";
    int fd = mkstemp(tmpl);
    REQUIRE(fd >= 0);
    std::string script = "#!/bin/sh\nsleep 1\nexec z3 \"$@\"\n";
    REQUIRE(write(fd, script.data(), script.size()) == static_cast<ssize_t>(script.size()));
    close(fd);
    chmod(tmpl, 0755);
    auto cfg = testing::solver_config();
    cfg.executable = tmpl;
    {
      TestServer ts(cfg);
      auto c = ts.client();
      REQUIRE(c.Put("/contracts/bakery", testing::fixture("bakery"), "application/json")->status == 201);
      auto first = std::async(std::launch::async, [&] {
        auto c1 = ts.client();
        return c1.Post("/contracts/bakery/analyze?kinds=unsat", "", "text/plain")->status;
      });
      std::this_thread::sleep_for(std::chrono::milliseconds(300));
      CHECK(c.Post("/contracts/bakery/analyze?kinds=unsat", "", "text/plain")->status == 409);
      CHECK(first.get() == 200);
    }
    unlink(tmpl);
  }
}
