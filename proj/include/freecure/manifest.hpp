#pragma once

// Run manifest: JSON schema, validation with path-to-field diagnostics, and a canonical
// serialization with every default materialized.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "freecure/analytic/backend.hpp"
#include "freecure/analytic/face.hpp"
#include "freecure/capture.hpp"
#include "freecure/conditioning.hpp"
#include "freecure/engine.hpp"
#include "freecure/errors.hpp"
#include "freecure/rofa.hpp"

namespace freecure {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct ManifestAttribute {
  std::string id;
  std::string label;
  TokenSpan token_span;
  Route route = Route::localized;
  MaskSource mask_source = MaskSource::parsing;
  std::set<int> parser_labels;

  friend bool operator==(const ManifestAttribute&, const ManifestAttribute&) = default;
};

struct IdentityReference {
  std::optional<analytic::SyntheticFaceSpec> synthetic;  // exactly one of the two is set
  std::optional<std::string> image;

  /// Groups results for Face Div.
  std::string key() const {
    if (synthetic) {
      std::string k = "synthetic:" + std::to_string(synthetic->identity_seed);
      for (const auto& [a, v] : synthetic->attribute_values) k += ";" + a + "=" + v;
      return k;
    }
    return "image:" + image.value_or("");
  }

  friend bool operator==(const IdentityReference&, const IdentityReference&) = default;
};

struct RunManifest {
  int schema_version = kSchemaVersion;
  std::string backend = "analytic";
  Json backend_options = Json::object();
  std::uint64_t seed = 0;
  int T = 50;
  std::string prompt;
  IdentityReference identity{analytic::SyntheticFaceSpec{}, std::nullopt};
  std::vector<ManifestAttribute> attributes;
  std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  std::set<BlockGroup> sweep_blocks{BlockGroup::up};
  double gamma = 0.45;
  int identity_injection_step = 10;
  int blend_start_step = 10;
  BlendPoint blend_point = BlendPoint::post_cfg;
  double guidance_scale = 1.0;
  bool attn_fusion = true;
  InversionOptions inversion;
  std::uint64_t face_div_seed = 0;
  std::string output_dir = "out";
  std::string parser = "synthetic";

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

namespace manifest_detail {

[[noreturn]] inline void bad(const std::string& path, const std::string& what) {
  fail(ErrorKind::manifest, path + ": " + what);
}

inline const Json* field(const Json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline void check_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) bad(path + "." + it.key(), "unknown field");
  }
}

inline std::string get_string(const Json& v, const std::string& path) {
  if (!v.is_string()) bad(path, "expected a string");
  return v.get<std::string>();
}

inline std::int64_t get_int(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) bad(path, "expected an integer");
  return v.get<std::int64_t>();
}

inline std::uint64_t get_uint(const Json& v, const std::string& path) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    bad(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

inline double get_number(const Json& v, const std::string& path) {
  if (!v.is_number()) bad(path, "expected a number");
  return v.get<double>();
}

inline bool get_bool(const Json& v, const std::string& path) {
  if (!v.is_boolean()) bad(path, "expected true or false");
  return v.get<bool>();
}

inline int get_step(const Json& v, const std::string& path, int lo, int hi) {
  const auto i = get_int(v, path);
  if (i < lo || i > hi) bad(path, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(i);
}

inline analytic::AnalyticOptions analytic_options(const Json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  check_keys(j, path,
             {"prior_spread", "attribute_logit", "placeholder_logit", "fused_attenuation", "supports_capture",
              "projector_seed"});
  analytic::AnalyticOptions o;
  if (auto v = field(j, "prior_spread")) o.prior_spread = get_number(*v, path + ".prior_spread");
  if (auto v = field(j, "attribute_logit")) o.attribute_logit = get_number(*v, path + ".attribute_logit");
  if (auto v = field(j, "placeholder_logit")) o.placeholder_logit = get_number(*v, path + ".placeholder_logit");
  if (auto v = field(j, "fused_attenuation")) o.fused_attenuation = get_number(*v, path + ".fused_attenuation");
  if (auto v = field(j, "supports_capture")) o.supports_capture = get_bool(*v, path + ".supports_capture");
  if (auto v = field(j, "projector_seed")) o.projector_seed = get_uint(*v, path + ".projector_seed");
  if (!(o.prior_spread >= 0.0)) bad(path + ".prior_spread", "must be >= 0");
  if (!(o.fused_attenuation > 0.0 && o.fused_attenuation < 1.0)) bad(path + ".fused_attenuation", "must lie in (0,1)");
  return o;
}

inline Json analytic_options_json(const analytic::AnalyticOptions& o) {
  Json j = Json::object();
  j["prior_spread"] = o.prior_spread;
  j["attribute_logit"] = o.attribute_logit;
  j["placeholder_logit"] = o.placeholder_logit;
  j["fused_attenuation"] = o.fused_attenuation;
  j["supports_capture"] = o.supports_capture;
  j["projector_seed"] = o.projector_seed;
  return j;
}

inline IdentityReference parse_identity(const Json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  check_keys(j, path, {"synthetic", "image"});
  const Json* syn = field(j, "synthetic");
  const Json* img = field(j, "image");
  if ((syn != nullptr) == (img != nullptr)) bad(path, "set exactly one of 'synthetic' or 'image'");
  IdentityReference ref;
  if (img) {
    ref.image = get_string(*img, path + ".image");
    return ref;
  }
  const std::string sp = path + ".synthetic";
  if (!syn->is_object()) bad(sp, "expected an object");
  check_keys(*syn, sp, {"identity_seed", "attributes"});
  analytic::SyntheticFaceSpec spec;
  if (auto v = field(*syn, "identity_seed")) spec.identity_seed = get_uint(*v, sp + ".identity_seed");
  if (auto v = field(*syn, "attributes")) {
    if (!v->is_object()) bad(sp + ".attributes", "expected an object");
    for (auto it = v->begin(); it != v->end(); ++it)
      spec.attribute_values[it.key()] = get_string(it.value(), sp + ".attributes." + it.key());
    try {
      (void)analytic::apply_attribute_values({}, spec.attribute_values);
    } catch (const Error& e) {
      bad(sp + ".attributes", e.what());
    }
  }
  ref.synthetic = std::move(spec);
  return ref;
}

inline ManifestAttribute parse_attribute(const Json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
  check_keys(j, path, {"id", "label", "token_span", "route", "mask_source", "parser_labels"});
  ManifestAttribute a;
  const Json* id = field(j, "id");
  if (!id) bad(path + ".id", "required field missing");
  a.id = get_string(*id, path + ".id");
  if (a.id.empty()) bad(path + ".id", "must be non-empty");
  a.label = a.id;
  if (auto v = field(j, "label")) a.label = get_string(*v, path + ".label");
  const Json* span = field(j, "token_span");
  if (!span) bad(path + ".token_span", "required field missing");
  if (!span->is_array() || span->size() != 2) bad(path + ".token_span", "expected [begin, end]");
  const auto b = get_int((*span)[0], path + ".token_span[0]");
  const auto e = get_int((*span)[1], path + ".token_span[1]");
  if (b < 0 || e <= b) bad(path + ".token_span", "expected 0 <= begin < end");
  a.token_span = {static_cast<std::size_t>(b), static_cast<std::size_t>(e)};
  if (auto v = field(j, "route")) {
    const auto r = get_string(*v, path + ".route");
    if (r != "localized" && r != "abstract") bad(path + ".route", "expected 'localized' or 'abstract'");
    a.route = parse_route(r);
  }
  if (auto v = field(j, "mask_source")) {
    const auto m = get_string(*v, path + ".mask_source");
    if (m == "parsing") a.mask_source = MaskSource::parsing;
    else if (m == "attention_only") a.mask_source = MaskSource::attention_only;
    else bad(path + ".mask_source", "expected 'parsing' or 'attention_only'");
  }
  if (auto v = field(j, "parser_labels")) {
    if (!v->is_array()) bad(path + ".parser_labels", "expected an array of integers");
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto l = get_int((*v)[i], path + ".parser_labels[" + std::to_string(i) + "]");
      if (l < 0) bad(path + ".parser_labels[" + std::to_string(i) + "]", "labels are non-negative");
      a.parser_labels.insert(static_cast<int>(l));
    }
  }
  if (a.route == Route::localized && a.mask_source == MaskSource::parsing && a.parser_labels.empty())
    bad(path + ".parser_labels", "localized parsing attributes need at least one label");
  return a;
}

}  // namespace manifest_detail

inline std::string to_string(MaskSource m) { return m == MaskSource::parsing ? "parsing" : "attention_only"; }

inline RunManifest manifest_from_json(const Json& j) {
  using namespace manifest_detail;
  if (!j.is_object()) bad("$", "manifest must be a JSON object");
  check_keys(j, "$",
             {"schema_version", "backend", "backend_options", "seed", "T", "prompt", "identity", "attributes", "alphas",
              "sweep_blocks", "gamma", "identity_injection_step", "blend_start_step", "blend_point", "guidance_scale",
              "attn_fusion", "inversion", "face_div_seed", "output_dir", "parser"});
  RunManifest m;
  if (auto v = field(j, "schema_version")) {
    m.schema_version = static_cast<int>(get_int(*v, "$.schema_version"));
    if (m.schema_version != kSchemaVersion)
      bad("$.schema_version", "unsupported version " + std::to_string(m.schema_version));
  }
  const Json* backend = field(j, "backend");
  if (!backend) bad("$.backend", "required field missing");
  m.backend = get_string(*backend, "$.backend");
  if (m.backend != "analytic" && !(m.backend.rfind("external:", 0) == 0 && m.backend.size() > 9))
    bad("$.backend", "expected 'analytic' or 'external:<id>'");
  if (auto v = field(j, "backend_options")) {
    if (!v->is_object()) bad("$.backend_options", "expected an object");
    m.backend_options = *v;
  }
  if (m.backend == "analytic")
    m.backend_options = analytic_options_json(analytic_options(m.backend_options, "$.backend_options"));

  const Json* seed = field(j, "seed");
  if (!seed) bad("$.seed", "required field missing");
  m.seed = get_uint(*seed, "$.seed");
  if (auto v = field(j, "T")) m.T = get_step(*v, "$.T", 1, 10000);
  const Json* prompt = field(j, "prompt");
  if (!prompt) bad("$.prompt", "required field missing");
  m.prompt = get_string(*prompt, "$.prompt");
  if (m.prompt.empty()) bad("$.prompt", "must be non-empty");
  if (auto v = field(j, "identity")) m.identity = parse_identity(*v, "$.identity");

  if (auto v = field(j, "attributes")) {
    if (!v->is_array()) bad("$.attributes", "expected an array");
    for (std::size_t i = 0; i < v->size(); ++i)
      m.attributes.push_back(parse_attribute((*v)[i], "$.attributes[" + std::to_string(i) + "]"));
    for (std::size_t i = 0; i < m.attributes.size(); ++i)
      for (std::size_t k = 0; k < i; ++k) {
        const auto& a = m.attributes[k];
        const auto& b = m.attributes[i];
        const std::string where = "$.attributes[" + std::to_string(i) + "]";
        if (a.id == b.id) bad(where + ".id", "duplicate attribute id '" + b.id + "'");
        if (a.token_span.overlaps(b.token_span))
          bad(where + ".token_span", "token spans of attributes '" + a.id + "' and '" + b.id + "' overlap");
      }
  }
  if (auto v = field(j, "alphas")) {
    if (!v->is_array()) bad("$.alphas", "expected an array of numbers");
    m.alphas.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string p = "$.alphas[" + std::to_string(i) + "]";
      const double a = get_number((*v)[i], p);
      if (!(a >= 0.0 && a <= 1.0)) bad(p, "must lie in [0,1]");
      m.alphas.push_back(a);
    }
  }
  if (auto v = field(j, "sweep_blocks")) {
    if (!v->is_array() || v->empty()) bad("$.sweep_blocks", "expected a non-empty array");
    m.sweep_blocks.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string p = "$.sweep_blocks[" + std::to_string(i) + "]";
      const auto s = get_string((*v)[i], p);
      if (s != "down" && s != "mid" && s != "up") bad(p, "expected 'down', 'mid' or 'up'");
      m.sweep_blocks.insert(parse_block_group(s));
    }
  }
  if (auto v = field(j, "gamma")) {
    m.gamma = get_number(*v, "$.gamma");
    if (!(m.gamma >= 0.0 && m.gamma <= 1.0)) bad("$.gamma", "must lie in [0,1]");
  }
  if (auto v = field(j, "identity_injection_step")) m.identity_injection_step = get_step(*v, "$.identity_injection_step", 0, m.T);
  if (m.identity_injection_step > m.T) bad("$.identity_injection_step", "must lie in [0, T]");
  m.blend_start_step = m.identity_injection_step;
  if (auto v = field(j, "blend_start_step")) m.blend_start_step = get_step(*v, "$.blend_start_step", 0, m.T);
  if (auto v = field(j, "blend_point")) {
    const auto s = get_string(*v, "$.blend_point");
    if (s != "post_cfg" && s != "pre_cfg") bad("$.blend_point", "expected 'post_cfg' or 'pre_cfg'");
    m.blend_point = parse_blend_point(s);
  }
  if (auto v = field(j, "guidance_scale")) {
    m.guidance_scale = get_number(*v, "$.guidance_scale");
    if (!(m.guidance_scale >= 1.0)) bad("$.guidance_scale", "must be >= 1");
  }
  if (auto v = field(j, "attn_fusion")) m.attn_fusion = get_bool(*v, "$.attn_fusion");
  if (auto v = field(j, "inversion")) {
    if (!v->is_object()) bad("$.inversion", "expected an object");
    check_keys(*v, "$.inversion", {"max_iterations", "tolerance"});
    if (auto w = field(*v, "max_iterations")) m.inversion.max_iterations = get_step(*w, "$.inversion.max_iterations", 1, 100000);
    if (auto w = field(*v, "tolerance")) {
      m.inversion.tolerance = get_number(*w, "$.inversion.tolerance");
      if (!(m.inversion.tolerance > 0.0)) bad("$.inversion.tolerance", "must be > 0");
    }
  }
  if (auto v = field(j, "face_div_seed")) m.face_div_seed = get_uint(*v, "$.face_div_seed");
  if (auto v = field(j, "output_dir")) m.output_dir = get_string(*v, "$.output_dir");
  if (auto v = field(j, "parser")) {
    m.parser = get_string(*v, "$.parser");
    if (m.parser != "synthetic") bad("$.parser", "unknown parser '" + m.parser + "'");
  }
  return m;
}

inline Json manifest_to_json(const RunManifest& m) {
  Json j = Json::object();
  j["schema_version"] = m.schema_version;
  j["backend"] = m.backend;
  j["backend_options"] = m.backend_options;
  j["seed"] = m.seed;
  j["T"] = m.T;
  j["prompt"] = m.prompt;
  Json id = Json::object();
  if (m.identity.synthetic) {
    Json s = Json::object();
    s["identity_seed"] = m.identity.synthetic->identity_seed;
    Json attrs = Json::object();
    for (const auto& [k, v] : m.identity.synthetic->attribute_values) attrs[k] = v;
    s["attributes"] = attrs;
    id["synthetic"] = s;
  } else {
    id["image"] = m.identity.image.value_or("");
  }
  j["identity"] = id;
  Json attrs = Json::array();
  for (const auto& a : m.attributes) {
    Json e = Json::object();
    e["id"] = a.id;
    e["label"] = a.label;
    e["token_span"] = Json::array({a.token_span.begin, a.token_span.end});
    e["route"] = std::string(to_string(a.route));
    e["mask_source"] = to_string(a.mask_source);
    e["parser_labels"] = Json(std::vector<int>(a.parser_labels.begin(), a.parser_labels.end()));
    attrs.push_back(e);
  }
  j["attributes"] = attrs;
  j["alphas"] = m.alphas;
  Json blocks = Json::array();
  for (auto g : m.sweep_blocks) blocks.push_back(std::string(to_string(g)));
  j["sweep_blocks"] = blocks;
  j["gamma"] = m.gamma;
  j["identity_injection_step"] = m.identity_injection_step;
  j["blend_start_step"] = m.blend_start_step;
  j["blend_point"] = std::string(to_string(m.blend_point));
  j["guidance_scale"] = m.guidance_scale;
  j["attn_fusion"] = m.attn_fusion;
  j["inversion"] = {{"max_iterations", m.inversion.max_iterations}, {"tolerance", m.inversion.tolerance}};
  j["face_div_seed"] = m.face_div_seed;
  j["output_dir"] = m.output_dir;
  j["parser"] = m.parser;
  return j;
}

inline RunManifest parse_manifest(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::manifest, std::string("$: invalid JSON: ") + e.what());
  }
  return manifest_from_json(j);
}

inline std::string serialize_manifest(const RunManifest& m) { return manifest_to_json(m).dump(2) + "\n"; }

inline RunManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorKind::io, "cannot open manifest " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_manifest(ss.str());
}

inline void save_manifest(const std::filesystem::path& path, const RunManifest& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  require(static_cast<bool>(f), ErrorKind::io, "cannot write manifest " + path.string());
  f << serialize_manifest(m);
}

inline RunConfig run_config(const RunManifest& m) {
  RunConfig cfg;
  cfg.identity_injection_step = m.identity_injection_step;
  cfg.blend_start_step = m.blend_start_step;
  cfg.guidance_scale = m.guidance_scale;
  cfg.blend_point = m.blend_point;
  return cfg;
}

inline std::vector<PromptAttribute> prompt_attributes(const RunManifest& m) {
  std::vector<PromptAttribute> out;
  for (const auto& a : m.attributes) out.push_back({a.id, a.label, a.token_span, a.mask_source});
  return out;
}

}  // namespace freecure
