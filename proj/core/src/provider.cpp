#include "vlselect/provider.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vlselect/errors.hpp"
#include "vlselect/hash.hpp"
#include "vlselect/random.hpp"
#include "vlselect/skill_prompt.hpp"

namespace vlselect {

using nlohmann::json;

void validate(const ProviderConfig& config) {
  if (config.max_concurrency == 0) throw PreconditionError("max_concurrency must be at least 1");
  if (config.batch_size == 0) throw PreconditionError("batch_size must be at least 1");
}

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw PreconditionError("provider endpoint needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::string api_key(const ProviderConfig& config) {
  if (!config.api_key.empty()) return config.api_key;
  const char* env = std::getenv(kApiKeyEnv);
  return env ? std::string(env) : std::string{};
}

json post_json(const ProviderConfig& config, const json& body) {
  const auto endpoint = split_endpoint(config.endpoint);
  httplib::Client client(endpoint.base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (const auto key = api_key(config); !key.empty()) headers.emplace("Authorization", "Bearer " + key);

  auto res = client.Post(endpoint.path, headers, body.dump(), "application/json");
  if (!res) {
    throw ProviderError("request to " + config.endpoint + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError("request to " + config.endpoint + " returned HTTP " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw ProviderError("unparseable response from " + config.endpoint + ": " + e.what());
  }
}

bool contains_any(const std::string& haystack, std::initializer_list<std::string_view> needles) {
  return std::any_of(needles.begin(), needles.end(),
                     [&](std::string_view n) { return haystack.find(n) != std::string::npos; });
}

}  // namespace

HttpChatProvider::HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {
  validate(config_);
  split_endpoint(config_.endpoint);
}

std::string HttpChatProvider::id() const { return "http:" + config_.model_name; }

std::string HttpChatProvider::complete(const std::string& prompt) {
  const json body = {{"model", config_.model_name},
                     {"temperature", config_.temperature},
                     {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
  const json reply = post_json(config_, body);
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string{} : content.get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("chat response lacks choices[0].message.content: ") + e.what());
  }
}

HttpEmbeddingProvider::HttpEmbeddingProvider(ProviderConfig config) : config_(std::move(config)) {
  validate(config_);
  split_endpoint(config_.endpoint);
}

std::string HttpEmbeddingProvider::id() const { return "http-embed:" + config_.model_name; }

std::vector<std::vector<float>> HttpEmbeddingProvider::embed(const std::vector<std::string>& texts) {
  const json body = {{"model", config_.model_name}, {"input", texts}};
  const json reply = post_json(config_, body);
  try {
    const auto& data = reply.at("data");
    if (data.size() != texts.size()) {
      throw ProviderError("embeddings response has " + std::to_string(data.size()) + " items for " +
                          std::to_string(texts.size()) + " inputs");
    }
    std::vector<std::vector<float>> out(texts.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t slot = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
      if (slot >= out.size() || !out[slot].empty()) throw ProviderError("embeddings response has a bad index");
      out[slot] = data[i].at("embedding").get<std::vector<float>>();
    }
    return out;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed embeddings response: ") + e.what());
  }
}

std::string mock_skill_phrase(const std::string& prompt) {
  // only the question lines take part in keyword matching
  std::string questions = prompt;
  if (questions.rfind(kSkillPromptHeader, 0) == 0) questions.erase(0, kSkillPromptHeader.size());
  if (const auto cut = questions.find(kSkillPromptInstruction); cut != std::string::npos) {
    questions.erase(cut);
  }
  std::transform(questions.begin(), questions.end(), questions.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

  if (contains_any(questions, {"how many", "number of", "count"})) {
    return "Identify and differentiate between the objects in the image and count them.";
  }
  if (contains_any(questions, {"graph", "chart", "plot", "trend", "table"})) {
    return "Interpret the chart and identify trends in the plotted data.";
  }
  if (contains_any(questions, {"read", "text", "written", "sign", "say"})) {
    return "Read and interpret the text shown in the image.";
  }
  if (contains_any(questions, {"color", "colour"})) {
    return "Recognize and compare the colors of objects in the image.";
  }
  if (contains_any(questions, {"species", "animal", "bird", "plant", "organism"})) {
    return "Identify the organism's species and recognize its characteristics.";
  }
  if (contains_any(questions, {"where", "left", "right", "behind", "position"})) {
    return "Understand spatial relationships between objects in the scene.";
  }
  static constexpr std::array<std::string_view, 6> kCanned = {
      "Recognize the main objects and their attributes in the image.",
      "Interpret the scene context to infer what is happening.",
      "Compare visual details across regions of the image.",
      "Relate visual evidence to common-sense knowledge.",
      "Locate the relevant region and describe its contents.",
      "Infer the purpose or function of the depicted objects.",
  };
  return std::string(kCanned[fnv1a64(prompt) % kCanned.size()]);
}

std::string MockChatProvider::complete(const std::string& prompt) {
  ++calls_;
  return responder_ ? responder_(prompt) : mock_skill_phrase(prompt);
}

std::vector<std::vector<float>> MockEmbeddingProvider::embed(const std::vector<std::string>& texts) {
  ++calls_;
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    Rng rng(fnv1a64(text));
    std::vector<double> v(dim_);
    double norm = 0.0;
    for (auto& x : v) {
      x = rng.standard_normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    std::vector<float> row(dim_);
    for (std::size_t i = 0; i < dim_; ++i) row[i] = static_cast<float>(v[i] / norm);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace vlselect
