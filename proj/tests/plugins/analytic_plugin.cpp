// Out-of-tree style backend plug-in wrapping the analytic backend; options arrive as JSON.

#include <json.hpp>

#include "freecure/analytic/backend.hpp"
#include "freecure/manifest.hpp"

extern "C" freecure::DiffusionBackend* freecure_create_backend(const char* options_json) {
  try {
    const auto j = freecure::Json::parse(options_json ? options_json : "{}");
    return new freecure::analytic::AnalyticBackend(
        freecure::manifest_detail::analytic_options(j, "$.backend_options"));
  } catch (...) {
    return nullptr;
  }
}
