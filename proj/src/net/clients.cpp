#include "tega/net.hpp"

#include <array>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "tega/error.hpp"
#include "tega/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tega::net {
namespace {

constexpr char kB64[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string ppm_bytes(const RenderedView& view) {
  std::ostringstream os;
  os << "P6\n" << view.width << " " << view.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(view.pixels.data()),
           std::streamsize(view.pixels.size()));
  return os.str();
}

std::vector<float> floats_from_json(const json& row) {
  std::vector<float> out;
  out.reserve(row.size());
  for (const auto& v : row) out.push_back(v.get<float>());
  return out;
}

}  // namespace

std::string base64_encode(const std::uint8_t* data, std::size_t n) {
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (std::size_t i = 0; i < n; i += 3) {
    std::uint32_t v = std::uint32_t(data[i]) << 16;
    if (i + 1 < n) v |= std::uint32_t(data[i + 1]) << 8;
    if (i + 2 < n) v |= data[i + 2];
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(i + 1 < n ? kB64[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < n ? kB64[v & 63] : '=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  static const auto table = [] {
    std::array<std::int8_t, 256> t;
    t.fill(-1);
    for (int i = 0; i < 64; ++i) t[std::uint8_t(kB64[i])] = std::int8_t(i);
    return t;
  }();
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const std::int8_t v = table[std::uint8_t(c)];
    if (v < 0) {
      throw Error(ErrorCode::ParseError, "invalid base64 input", "net");
    }
    acc = (acc << 6) | std::uint32_t(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(std::uint8_t((acc >> bits) & 0xff));
    }
  }
  return out;
}

JsonClient::JsonClient(const ClientOptions& options) : options_(options) {
  if (options_.endpoint.empty()) {
    throw Error(ErrorCode::InvalidArgument, "endpoint not configured", "net");
  }
}

std::string JsonClient::post(const std::string& path, const std::string& body) {
  fs::path cache_file;
  if (!options_.cache_dir.empty()) {
    std::uint64_t key = hash_combine(hash_combine(0xcbf29ce484222325ull, path),
                                     body);
    char name[32];
    std::snprintf(name, sizeof name, "%016llx.json",
                  static_cast<unsigned long long>(key));
    cache_file = fs::path(options_.cache_dir) / name;
    if (fs::exists(cache_file)) {
      std::ifstream in(cache_file, std::ios::binary);
      std::ostringstream os;
      os << in.rdbuf();
      return os.str();
    }
  }

  httplib::Client client(options_.endpoint);
  client.set_connection_timeout(options_.timeout_sec, 0);
  client.set_read_timeout(options_.timeout_sec, 0);
  httplib::Headers headers;
  if (!options_.bearer_token.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.bearer_token);
  }

  std::string last_error;
  for (int attempt = 0; attempt < std::max(1, options_.retries); ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(options_.backoff_ms << (attempt - 1)));
    }
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      // 4xx is a protocol disagreement, not an outage: do not retry.
      if (res->status >= 400 && res->status < 500) {
        throw Error(ErrorCode::JudgeProtocolError,
                    path + " rejected request: " + last_error, "net");
      }
      continue;
    }
    if (!cache_file.empty()) {
      fs::create_directories(cache_file.parent_path());
      std::ofstream out(cache_file, std::ios::binary);
      out << res->body;
    }
    return res->body;
  }
  throw Error(ErrorCode::BackendUnreachable,
              options_.endpoint + path + ": " + last_error, "net");
}

PointCloud RemoteGenerator::generate(const GenerationRequest& request) {
  json body;
  body["prompt"] = request.prompt;
  body["guidance_scale"] = request.guidance_scale;
  body["num_points"] = request.num_points;
  body["steps"] = request.steps;
  body["seed"] = request.seed;
  const std::string raw = client_.post("/generate", body.dump());
  json reply;
  try {
    reply = json::parse(raw);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::GenerationFailed,
                std::string("malformed /generate reply: ") + e.what(), "net");
  }
  if (reply.contains("error")) {
    throw Error(ErrorCode::GenerationFailed,
                reply["error"].get<std::string>(), "generate");
  }
  const auto bytes = base64_decode(reply.at("points").get<std::string>());
  if (bytes.size() != std::size_t(request.num_points) * 12) {
    throw Error(ErrorCode::InvalidCount,
                "backend returned wrong point payload size", "generate");
  }
  PointCloud pc;
  pc.points.resize(std::size_t(request.num_points) * 3);
  std::memcpy(pc.points.data(), bytes.data(), bytes.size());
  return pc;
}

std::string RemoteCaptioner::caption(const RenderedView& view,
                                     const PointCloud*) {
  const std::string ppm = ppm_bytes(view);
  json body;
  body["image"] = base64_encode(
      reinterpret_cast<const std::uint8_t*>(ppm.data()), ppm.size());
  const std::string raw = client_.post("/caption", body.dump());
  try {
    return json::parse(raw).at("caption").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CaptionFailed,
                std::string("malformed /caption reply: ") + e.what(), "net");
  }
}

std::string RemoteMerger::merge(const std::vector<std::string>& captions) {
  json body;
  body["captions"] = captions;
  const std::string raw = client_.post("/merge", body.dump());
  try {
    return json::parse(raw).at("caption").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MergeFailed,
                std::string("malformed /merge reply: ") + e.what(), "net");
  }
}

int RemoteJudge::score(const std::string& prompt, const std::string& caption) {
  json body;
  body["system_prompt"] = filtering::judge_system_prompt();
  body["user_prompt"] = filtering::judge_user_prompt(prompt, caption);
  const std::string raw = client_.post("/judge", body.dump());
  int value = 0;
  try {
    value = json::parse(raw).at("score").get<int>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::JudgeProtocolError,
                std::string("malformed /judge reply: ") + e.what(), "net");
  }
  if (value < 1 || value > 5) {
    throw Error(ErrorCode::JudgeProtocolError,
                "judge score " + std::to_string(value) + " outside [1,5]",
                "net");
  }
  return value;
}

std::vector<std::vector<float>> RemoteFeatureClient::embed_text(
    const std::vector<std::string>& texts) {
  json body;
  body["texts"] = texts;
  const std::string raw = client_.post("/embed_text", body.dump());
  std::vector<std::vector<float>> out;
  try {
    for (const auto& row : json::parse(raw).at("vectors")) {
      out.push_back(floats_from_json(row));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError,
                std::string("malformed /embed_text reply: ") + e.what(), "net");
  }
  return out;
}

std::vector<std::vector<float>> RemoteFeatureClient::embed_image(
    const std::vector<RenderedView>& views) {
  json body;
  std::vector<std::string> images;
  images.reserve(views.size());
  for (const RenderedView& v : views) {
    const std::string ppm = ppm_bytes(v);
    images.push_back(base64_encode(
        reinterpret_cast<const std::uint8_t*>(ppm.data()), ppm.size()));
  }
  body["images"] = images;
  const std::string raw = client_.post("/embed_image", body.dump());
  std::vector<std::vector<float>> out;
  try {
    for (const auto& row : json::parse(raw).at("vectors")) {
      out.push_back(floats_from_json(row));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError,
                std::string("malformed /embed_image reply: ") + e.what(),
                "net");
  }
  return out;
}

}  // namespace tega::net
