#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "groundcot/datapipe.hpp"

namespace groundcot::datapipe {

namespace {

using nlohmann::json;

json post_json(const HttpClientConfig& config, const json& body) {
  httplib::Client client(config.base_url);
  client.set_connection_timeout(config.timeout_seconds, 0);
  client.set_read_timeout(config.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config.token_env.empty()) {
    if (const char* token = std::getenv(config.token_env.c_str())) {
      headers.emplace("Authorization", fmt::format("Bearer {}", token));
    }
  }
  const auto res = client.Post(config.path, headers, body.dump(), "application/json");
  if (!res) {
    throw ClientError(fmt::format("POST {}{}: {}", config.base_url, config.path,
                                  httplib::to_string(res.error())));
  }
  if (res->status != 200) {
    throw ClientError(fmt::format("POST {}{}: HTTP {}", config.base_url, config.path, res->status));
  }
  auto doc = json::parse(res->body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ClientError(fmt::format("POST {}{}: response is not a JSON object", config.base_url,
                                  config.path));
  }
  return doc;
}

}  // namespace

HttpDraftGenerator::HttpDraftGenerator(HttpClientConfig config) : config_(std::move(config)) {}

DraftTrace HttpDraftGenerator::generate(const SourceTriplet& triplet) {
  const auto doc = post_json(config_, {{"id", triplet.id},
                                       {"image_ref", triplet.image_ref},
                                       {"question", triplet.question},
                                       {"gold_answer", triplet.gold_answer}});
  if (!doc.contains("steps") || !doc.at("steps").is_array()) {
    throw ClientError("generator response has no steps array");
  }
  DraftTrace draft;
  for (const auto& s : doc.at("steps")) {
    if (!s.is_object() || !s.contains("text") || !s.at("text").is_string()) {
      throw ClientError("generator step has no text");
    }
    DraftStep step{s.at("text").get<std::string>(), std::nullopt};
    if (s.contains("point")) {
      const auto& p = s.at("point");
      if (!p.is_object() || !p.contains("description") || !p.at("description").is_string() ||
          !p.contains("count") || !p.at("count").is_number_integer()) {
        throw ClientError("generator point request must be {description, count}");
      }
      step.request = PointRequest{p.at("description").get<std::string>(), p.at("count").get<int>()};
    }
    draft.steps.push_back(std::move(step));
  }
  return draft;
}

HttpPointGrounder::HttpPointGrounder(HttpClientConfig config) : config_(std::move(config)) {}

GrounderResult HttpPointGrounder::ground(const SourceTriplet& triplet, const PointRequest& request,
                                         std::size_t /*request_index*/, int attempt) {
  const auto doc = post_json(config_, {{"id", triplet.id},
                                       {"image_ref", triplet.image_ref},
                                       {"question", triplet.question},
                                       {"description", request.description},
                                       {"declared_count", request.declared_count},
                                       {"attempt", attempt}});
  GrounderResult result;
  result.description = doc.contains("description") && doc.at("description").is_string()
                           ? doc.at("description").get<std::string>()
                           : request.description;
  if (!doc.contains("points") || !doc.at("points").is_array()) {
    throw ClientError("grounder response has no points array");
  }
  for (const auto& p : doc.at("points")) {
    if (!p.is_object() || !p.contains("x") || !p.contains("y") || !p.at("x").is_number() ||
        !p.at("y").is_number()) {
      throw ClientError("grounder point must be {x, y}");
    }
    result.points.push_back({p.at("x").get<double>(), p.at("y").get<double>()});
  }
  return result;
}

}  // namespace groundcot::datapipe
