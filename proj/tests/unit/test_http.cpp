#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "nsbot/http_api.hpp"
#include "support.hpp"

using namespace nsbot;
using namespace nsbot::service;
using namespace testing_support;
using json = nlohmann::json;

namespace {

// Mock table whose understand step can be switched into a failure mode.
class SwitchBackend : public nl::Backend {
public:
    enum class Mode { Ok, Down, Slow, Garbage };
    explicit SwitchBackend(std::shared_ptr<nl::Backend> inner) : inner_(std::move(inner)) {}
    std::string_view kind() const override { return "mock"; }
    std::string understand(const nl::UnderstandRequest& r) override {
        switch (mode.load()) {
        case Mode::Down: throw nl::BackendUnavailable("upstream down", 12);
        case Mode::Slow: throw nl::Timeout("upstream slow");
        case Mode::Garbage: return "require(";
        case Mode::Ok: break;
        }
        return inner_->understand(r);
    }
    std::string realize(const nl::RealizeRequest& r) override { return inner_->realize(r); }
    std::atomic<Mode> mode{Mode::Ok};

private:
    std::shared_ptr<nl::Backend> inner_;
};

struct HttpTest : ::testing::Test {
    std::shared_ptr<SwitchBackend> concierge_backend =
        std::make_shared<SwitchBackend>(nl::MockBackend::load(data("mock/concierge.yaml")));
    std::unique_ptr<Service> service;
    httplib::Server server;
    std::thread thread;
    int port = 0;

    void SetUp() override {
        Service::Options o;
        o.config.data_dir = data_dir();
        o.backends = [this](const std::string& task, const std::string&) -> std::shared_ptr<nl::Backend> {
            if (task == "concierge") return concierge_backend;
            return nl::MockBackend::load(data("mock/" + task + ".yaml"));
        };
        service = std::make_unique<Service>(std::move(o));
        install_routes(server, *service);
        port = server.bind_to_any_port("127.0.0.1");
        ASSERT_GT(port, 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    void TearDown() override {
        server.stop();
        if (thread.joinable()) thread.join();
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(10, 0);
        return c;
    }
    std::string create(const std::string& task) {
        auto res = client().Post("/v1/sessions", json{{"task", task}, {"seed", 7}}.dump(), "application/json");
        EXPECT_TRUE(res);
        EXPECT_EQ(res->status, 201);
        return json::parse(res->body)["session"]["id"];
    }
    httplib::Result say(const std::string& id, const std::string& text) {
        return client().Post("/v1/sessions/" + id + "/messages", json{{"text", text}}.dump(), "application/json");
    }
    static std::string error_of(const httplib::Result& res) { return json::parse(res->body)["error"]; }
};

} // namespace

TEST_F(HttpTest, HealthReportsSessions) {
    auto res = client().Get("/v1/health");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body)["status"], "ok");
    EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST_F(HttpTest, CreateReturnsSessionAndGreeting) {
    auto res = client().Post("/v1/sessions", R"({"task":"companion","seed":51247})", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 201);
    auto body = json::parse(res->body);
    EXPECT_EQ(body["session"]["task"], "companion");
    EXPECT_EQ(body["session"]["seed"], 51247);
    EXPECT_EQ(body["greeting"]["turn"], 0);
    EXPECT_FALSE(body["greeting"]["reply"].get<std::string>().empty());
    EXPECT_NE(body["greeting"]["action"].get<std::string>().find("talk("), std::string::npos);
}

TEST_F(HttpTest, ConversationTranscriptAndState) {
    auto id = create("concierge");
    auto res = say(id, "Can you recommend me a restaurant?");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    auto turn = json::parse(res->body);
    EXPECT_EQ(turn["turn"], 1);
    EXPECT_EQ(turn["action_kind"], "AskSlot");
    EXPECT_NE(turn["themes"].get<std::string>().find("'restaurant'"), std::string::npos);

    auto tr = client().Get("/v1/sessions/" + id + "/transcript");
    ASSERT_TRUE(tr);
    auto entries = json::parse(tr->body)["entries"];
    ASSERT_EQ(entries.size(), 3u);
    EXPECT_EQ(entries[1]["speaker"], "user");
    EXPECT_EQ(entries[2]["action_kind"], "AskSlot");

    auto st = client().Get("/v1/sessions/" + id + "/state");
    ASSERT_TRUE(st);
    auto state = json::parse(st->body);
    EXPECT_EQ(state["digest"], turn["digest"]);
    EXPECT_EQ(state["snapshot"]["turn_index"], 1);
}

TEST_F(HttpTest, PreflightIsAnswered) {
    auto res = client().Options("/v1/sessions");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 204);
    EXPECT_EQ(res->get_header_value("Access-Control-Allow-Methods"), "GET, POST, OPTIONS");
}

TEST_F(HttpTest, BadRequestsAre400) {
    auto res = client().Post("/v1/sessions", R"({"task":"weather"})", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(error_of(res), "BadTask");

    res = client().Post("/v1/sessions", "{not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(error_of(res), "BadRequest");

    res = client().Post("/v1/sessions", "[1,2]", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);

    auto id = create("concierge");
    res = client().Post("/v1/sessions/" + id + "/messages", R"({"txt":"hi"})", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(error_of(res), "BadRequest");
}

TEST_F(HttpTest, UnknownSessionsAre404) {
    auto res = say("abc123", "hello");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
    EXPECT_EQ(error_of(res), "UnknownSession");
    for (const char* path : {"/v1/sessions/abc123/state", "/v1/sessions/abc123/transcript", "/v1/sessions/NOT-HEX"}) {
        res = client().Get(path);
        ASSERT_TRUE(res);
        EXPECT_EQ(res->status, 404) << path;
    }
}

TEST_F(HttpTest, ClosedSessionIs409) {
    auto id = create("concierge");
    auto res = say(id, "Thank you for your help.");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_TRUE(json::parse(res->body)["closed"].get<bool>());
    res = say(id, "wait");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 409);
    EXPECT_EQ(error_of(res), "StateClosed");
}

TEST_F(HttpTest, BackendErrorsMapToStatuses) {
    auto id = create("concierge");
    auto digest = json::parse(client().Get("/v1/sessions/" + id + "/state")->body)["digest"];

    concierge_backend->mode = SwitchBackend::Mode::Down;
    auto res = say(id, "cheap");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 503);
    EXPECT_EQ(res->get_header_value("Retry-After"), "12");

    concierge_backend->mode = SwitchBackend::Mode::Slow;
    res = say(id, "cheap");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 504);
    EXPECT_EQ(error_of(res), "Timeout");

    concierge_backend->mode = SwitchBackend::Mode::Garbage;
    res = say(id, "cheap");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 422);
    EXPECT_EQ(error_of(res), "UnparseableOutput");

    EXPECT_EQ(json::parse(client().Get("/v1/sessions/" + id + "/state")->body)["digest"], digest);
    concierge_backend->mode = SwitchBackend::Mode::Ok;
    res = say(id, "cheap");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body)["turn"], 1);
}

TEST_F(HttpTest, LiveSessionWithoutCredentialIs503) {
    httplib::Server other;
    Service::Options o;
    o.config.data_dir = data_dir();
    o.config.live.credential_env = "NSBOT_SURELY_UNSET_VARIABLE";
    Service live(std::move(o));
    install_routes(other, live);
    int p = other.bind_to_any_port("127.0.0.1");
    std::thread t([&] { other.listen_after_bind(); });
    other.wait_until_ready();
    httplib::Client c("127.0.0.1", p);
    auto res = c.Post("/v1/sessions", R"({"task":"concierge","backend":"live"})", "application/json");
    other.stop();
    t.join();
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 503);
    EXPECT_FALSE(res->get_header_value("Retry-After").empty());
}
