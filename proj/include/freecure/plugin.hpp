#pragma once

// Backend discovery. "analytic" is built in; "external:<id>" loads libfreecure_<id>.so from
// the directories in FREECURE_BACKEND_PATH and calls its C entry point.

#include <dlfcn.h>

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "freecure/analytic/backend.hpp"
#include "freecure/analytic/parser.hpp"
#include "freecure/backend.hpp"
#include "freecure/manifest.hpp"

/// Plug-in entry point. Receives the manifest's backend_options as JSON text and returns a
/// heap-allocated backend (ownership passes to the caller), or null on failure.
extern "C" {
using freecure_create_backend_fn = freecure::DiffusionBackend* (*)(const char* options_json);
}

namespace freecure {

inline constexpr const char* kBackendPathEnv = "FREECURE_BACKEND_PATH";
inline constexpr const char* kBackendEntryPoint = "freecure_create_backend";

inline std::vector<std::filesystem::path> backend_search_path() {
  std::vector<std::filesystem::path> dirs;
  const char* env = std::getenv(kBackendPathEnv);
  if (!env) return dirs;
  std::stringstream ss(env);
  std::string item;
  while (std::getline(ss, item, ':'))
    if (!item.empty()) dirs.emplace_back(item);
  return dirs;
}

inline std::shared_ptr<DiffusionBackend> load_external_backend(const std::string& id, const std::string& options_json) {
  const std::string file = "libfreecure_" + id + ".so";
  for (const auto& dir : backend_search_path()) {
    const auto path = dir / file;
    if (!std::filesystem::exists(path)) continue;
    void* handle = dlopen(path.c_str(), RTLD_NOW | RTLD_LOCAL);
    if (!handle) {
      const char* why = dlerror();
      fail(ErrorKind::capability, "cannot load " + path.string() + ": " + (why ? why : "unknown error"));
    }
    auto create = reinterpret_cast<freecure_create_backend_fn>(dlsym(handle, kBackendEntryPoint));
    if (!create) {
      dlclose(handle);
      fail(ErrorKind::capability, path.string() + " does not export " + kBackendEntryPoint);
    }
    DiffusionBackend* raw = create(options_json.c_str());
    if (!raw) {
      dlclose(handle);
      fail(ErrorKind::backend, "backend '" + id + "' failed to initialise");
    }
    return std::shared_ptr<DiffusionBackend>(raw, [handle](DiffusionBackend* b) {
      delete b;
      dlclose(handle);
    });
  }
  fail(ErrorKind::capability, "unknown backend 'external:" + id + "' (" + file + " not found on " + kBackendPathEnv + ")");
}

inline std::shared_ptr<DiffusionBackend> make_backend(const RunManifest& m) {
  if (m.backend == "analytic")
    return std::make_shared<analytic::AnalyticBackend>(
        manifest_detail::analytic_options(m.backend_options, "$.backend_options"));
  if (m.backend.rfind("external:", 0) == 0) return load_external_backend(m.backend.substr(9), m.backend_options.dump());
  fail(ErrorKind::capability, "unknown backend '" + m.backend + "'");
}

inline std::shared_ptr<ParserAdapter> make_parser(const RunManifest& m) {
  if (m.parser == "synthetic") return std::make_shared<analytic::SyntheticParser>();
  fail(ErrorKind::capability, "unknown parser '" + m.parser + "'");
}

}  // namespace freecure
