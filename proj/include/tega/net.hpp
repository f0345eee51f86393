#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tega/filtering.hpp"
#include "tega/generation.hpp"

namespace tega::net {

std::string base64_encode(const std::uint8_t* data, std::size_t n);
std::vector<std::uint8_t> base64_decode(const std::string& text);

struct ClientOptions {
  std::string endpoint;      // "http://host:port"
  std::string cache_dir;     // empty -> caching disabled
  std::string bearer_token;  // empty -> no Authorization header
  int retries = 3;
  int backoff_ms = 1000;     // doubled per retry
  int timeout_sec = 30;
};

// POST `path` with a JSON body; responses cached on disk by content hash of
// (path, body). Transport failures retried with exponential backoff, then
// surfaced as BackendUnreachable.
class JsonClient {
 public:
  explicit JsonClient(const ClientOptions& options);
  std::string post(const std::string& path, const std::string& body);

 private:
  ClientOptions options_;
};

class RemoteGenerator : public Generator {
 public:
  explicit RemoteGenerator(const ClientOptions& options) : client_(options) {}
  PointCloud generate(const GenerationRequest& request) override;
  std::string identity() const override { return "remote"; }

 private:
  JsonClient client_;
};

class RemoteCaptioner : public Captioner {
 public:
  explicit RemoteCaptioner(const ClientOptions& options) : client_(options) {}
  std::string caption(const RenderedView& view,
                      const PointCloud* cloud_hint) override;

 private:
  JsonClient client_;
};

class RemoteMerger : public CaptionMerger {
 public:
  explicit RemoteMerger(const ClientOptions& options) : client_(options) {}
  std::string merge(const std::vector<std::string>& captions) override;

 private:
  JsonClient client_;
};

class RemoteJudge : public Judge {
 public:
  explicit RemoteJudge(const ClientOptions& options) : client_(options) {}
  int score(const std::string& prompt, const std::string& caption) override;

 private:
  JsonClient client_;
};

// Remote frozen feature providers (/embed_text, /embed_image).
class RemoteFeatureClient {
 public:
  explicit RemoteFeatureClient(const ClientOptions& options)
      : client_(options) {}
  std::vector<std::vector<float>> embed_text(
      const std::vector<std::string>& texts);
  std::vector<std::vector<float>> embed_image(
      const std::vector<RenderedView>& views);

 private:
  JsonClient client_;
};

}  // namespace tega::net
