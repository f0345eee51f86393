#include "tega/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace tega::kernels {

const Backend* avx2_backend_if_supported();  // kernels_avx2.cpp

namespace {

const Backend* g_forced = nullptr;

const Backend* detect() {
  if (const char* env = std::getenv("TEGA_KERNELS")) {
    std::string_view want(env);
    if (want == "scalar") return &scalar_backend();
    if (want == "avx2") {
      if (const Backend* b = avx2_backend_if_supported()) return b;
      // fall through to detection if the CPU cannot honor the request
    }
  }
  if (const Backend* b = avx2_backend_if_supported()) return b;
  return &scalar_backend();
}

}  // namespace

const Backend& active_backend() {
  static const Backend* detected = detect();
  return g_forced ? *g_forced : *detected;
}

void force_backend(std::string_view name) {
  if (name == "scalar") {
    g_forced = &scalar_backend();
  } else if (name == "avx2") {
    const Backend* b = avx2_backend_if_supported();
    if (!b) throw std::runtime_error("avx2 kernels unavailable on this CPU");
    g_forced = b;
  } else if (name.empty() || name == "auto") {
    g_forced = nullptr;
  } else {
    throw std::runtime_error("unknown kernel backend: " + std::string(name));
  }
}

}  // namespace tega::kernels
