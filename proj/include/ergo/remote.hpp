#pragma once

#include <string>
#include <vector>

#include <httplib.h>

#include "ergo/inference.hpp"
#include "ergo/serialization.hpp"

namespace ergo {

/// Connection settings for the remote relation backend, normally taken from
/// the ERGOSCENE_BACKEND_* environment variables by the CLI.
struct RemoteBackendConfig {
  std::string url;  // e.g. http://127.0.0.1:8080/infer
  double timeout_s = 5.0;
  int retries = 2;  // additional attempts after the first
};

/// Strict request/response client for a remote inference service. One
/// inference call is one idempotent POST; transport failures retry up to
/// `retries` times and then surface as retryable BackendErrors, while
/// protocol and schema errors are permanent.
class RemoteBackend : public InferenceBackend {
 public:
  explicit RemoteBackend(RemoteBackendConfig config) : config_(std::move(config)) {
    const std::string& url = config_.url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos || url.substr(0, scheme_end) != "http") {
      throw ConfigError("backend url must start with http:// (got '" + url + "')");
    }
    const std::string rest = url.substr(scheme_end + 3);
    const auto slash = rest.find('/');
    host_ = slash == std::string::npos ? rest : rest.substr(0, slash);
    path_ = slash == std::string::npos ? "/infer" : rest.substr(slash);
    if (host_.empty()) throw ConfigError("backend url has no host: '" + url + "'");
  }

  InferenceResult infer(const std::vector<ObjectAsset>& assets,
                        const Room& room) override {
    json request;
    request["room"] = room_to_json(room);
    json asset_list = json::array();
    for (const ObjectAsset& a : assets) asset_list.push_back(asset_to_json(a));
    request["assets"] = asset_list;
    request["criteria"] = {{"relation_schema", kLexiconSchema}};
    const std::string body = request.dump();

    httplib::Client client(host_);
    const auto seconds = static_cast<time_t>(config_.timeout_s);
    const auto micros = static_cast<time_t>((config_.timeout_s - seconds) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      httplib::Result res = client.Post(path_, body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;  // transport failure: retry
      }
      if (res->status != 200) {
        throw BackendError("backend returned HTTP " + std::to_string(res->status) +
                               " for " + config_.url,
                           /*retryable=*/false, first_asset_id(assets));
      }
      json payload = json::parse(res->body, nullptr, false);
      if (payload.is_discarded()) {
        throw BackendError("backend response is not valid JSON", /*retryable=*/false,
                           first_asset_id(assets));
      }
      return validate_backend_payload(payload, assets);
    }
    throw BackendError("backend unreachable after " +
                           std::to_string(config_.retries + 1) + " attempts (" +
                           last_error + ")",
                       /*retryable=*/true, first_asset_id(assets));
  }

 private:
  static std::string first_asset_id(const std::vector<ObjectAsset>& assets) {
    return assets.empty() ? std::string() : assets.front().id;
  }

  RemoteBackendConfig config_;
  std::string host_;  // host[:port]
  std::string path_;
};

}  // namespace ergo
