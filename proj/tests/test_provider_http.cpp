#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vlselect/errors.hpp"
#include "vlselect/skill_prompt.hpp"
#include "vlselect/skillgen.hpp"

namespace vlselect {
namespace {

using nlohmann::json;

// Local OpenAI-style server on an ephemeral port.
class FakeServer {
 public:
  FakeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      last_auth_ = req.get_header_value("Authorization");
      last_model_ = body.at("model").get<std::string>();
      last_temperature_ = body.at("temperature").get<double>();
      if (fail_first_.load() > 0) {
        --fail_first_;
        res.status = 503;
        return;
      }
      ++chat_calls_;
      const auto prompt = body.at("messages").at(0).at("content").get<std::string>();
      const bool counting = prompt.find("How many") != std::string::npos;
      json reply = {{"choices",
                     json::array({{{"message",
                                    {{"role", "assistant"},
                                     {"content", counting ? "Count the objects.\nMore." : "Read the text."}}}}})}};
      res.set_content(reply.dump(), "application/json");
    });
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      json data = json::array();
      const auto& input = body.at("input");
      // reversed order with explicit indices
      for (std::size_t k = input.size(); k-- > 0;) {
        const float v = static_cast<float>(input[k].get<std::string>().size());
        data.push_back({{"index", k}, {"embedding", {v, 1.0f, 0.0f}}});
      }
      res.set_content(json{{"data", data}}.dump(), "application/json");
    });
    server_.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{not json", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  std::atomic<int> fail_first_{0};
  std::atomic<int> chat_calls_{0};
  std::string last_auth_;
  std::string last_model_;
  double last_temperature_ = -1;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

ProviderConfig config_for(const std::string& endpoint) {
  ProviderConfig c;
  c.endpoint = endpoint;
  c.model_name = "test-model";
  c.api_key = "secret";
  c.retry_backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(5000);
  c.max_concurrency = 1;
  return c;
}

TEST(HttpChat, WireFormat) {
  FakeServer server;
  HttpChatProvider chat(config_for(server.url("/v1/chat/completions")));
  EXPECT_EQ(chat.complete(build_skill_prompt({"How many birds?"})), "Count the objects.\nMore.");
  EXPECT_EQ(server.last_auth_, "Bearer secret");
  EXPECT_EQ(server.last_model_, "test-model");
  EXPECT_EQ(server.last_temperature_, 0.0);
}

TEST(HttpChat, RetriesTransientStatus) {
  FakeServer server;
  server.fail_first_ = 2;
  HttpChatProvider chat(config_for(server.url("/v1/chat/completions")));
  std::vector<InstructionRecord> recs{{"r0", "", {"How many birds?"}, {}, {}}};
  ExtractStats stats;
  const auto out = extract_skill_descriptions(recs, chat, config_for(""), nullptr, &stats);
  EXPECT_EQ(out[0].text, "Count the objects.");
  EXPECT_EQ(stats.provider_calls, 3u);
}

TEST(HttpChat, ExhaustedRetriesRaiseProviderError) {
  FakeServer server;
  server.fail_first_ = 100;
  HttpChatProvider chat(config_for(server.url("/v1/chat/completions")));
  auto cfg = config_for("");
  cfg.max_retries = 2;
  std::vector<InstructionRecord> recs{{"r9", "", {"q"}, {}, {}}};
  try {
    extract_skill_descriptions(recs, chat, cfg, nullptr);
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.record_id(), "r9");
  }
  EXPECT_EQ(server.fail_first_.load(), 97);
}

TEST(HttpChat, MalformedAndUnreachable) {
  FakeServer server;
  HttpChatProvider broken(config_for(server.url("/broken")));
  EXPECT_THROW(broken.complete("x"), ProviderError);
  auto cfg = config_for("http://127.0.0.1:1/v1/chat/completions");
  cfg.timeout = std::chrono::milliseconds(500);
  HttpChatProvider unreachable(cfg);
  EXPECT_THROW(unreachable.complete("x"), ProviderError);
  EXPECT_THROW(HttpChatProvider(config_for("no-scheme")), PreconditionError);
}

TEST(HttpEmbed, OrdersByIndexAndBatches) {
  FakeServer server;
  HttpEmbeddingProvider embed(config_for(server.url("/v1/embeddings")));
  const auto vecs = embed.embed({"a", "abc", "ab"});
  ASSERT_EQ(vecs.size(), 3u);
  EXPECT_EQ(vecs[0][0], 1.0f);
  EXPECT_EQ(vecs[1][0], 3.0f);
  EXPECT_EQ(vecs[2][0], 2.0f);

  auto cfg = config_for("");
  cfg.batch_size = 2;
  std::vector<SkillDescription> descs{{"a", "x", "h", 1}, {"b", "yy", "h", 2}, {"c", "zzz", "h", 3}};
  const auto m = embed_skill_descriptions(descs, embed, cfg);
  EXPECT_EQ(m.count(), 3u);
  EXPECT_EQ(m.dim(), 3u);
  EXPECT_TRUE(rows_are_unit(m));
}

}  // namespace
}  // namespace vlselect
