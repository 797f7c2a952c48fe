#pragma once

// Command implementations behind the CLI: enhance, sweep, eval, dump-attn, corpus.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "freecure/analytic/evaluators.hpp"
#include "freecure/corpus.hpp"
#include "freecure/io/fct.hpp"
#include "freecure/io/png.hpp"
#include "freecure/manifest.hpp"
#include "freecure/metrics.hpp"
#include "freecure/plugin.hpp"
#include "freecure/rofa.hpp"
#include "freecure/sweep.hpp"

namespace freecure {

namespace fs = std::filesystem;

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitCapability = 3, kExitRuntime = 4, kExitIo = 5 };

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument:
    case ErrorKind::invalid_prompt:
    case ErrorKind::manifest: return kExitUsage;
    case ErrorKind::capability: return kExitCapability;
    case ErrorKind::io:
    case ErrorKind::format: return kExitIo;
    default: return kExitRuntime;
  }
}

/// Shortest round-trip rendering, used for directory names of sweep values.
inline std::string value_label(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = std::min(csv.find(',', start), csv.size());
    const std::string item = csv.substr(start, comma - start);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    require(!item.empty() && ec == std::errc() && ptr == item.data() + item.size(), ErrorKind::invalid_argument,
            "bad value '" + item + "' in list '" + csv + "'");
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

inline Image reference_image(const RunManifest& m, const fs::path& base_dir = {}) {
  if (m.identity.synthetic) return analytic::render_target(*m.identity.synthetic);
  fs::path p = *m.identity.image;
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return io::read_png(p);
}

inline PipelineRequest make_request(const RunManifest& m, const Image& reference) {
  PipelineRequest req;
  req.prompt = m.prompt;
  for (const auto& a : m.attributes)
    req.attributes.push_back({{a.id, a.label, a.token_span, a.mask_source}, a.route, a.parser_labels});
  req.reference = reference;
  req.reference_ref = m.identity.key();
  req.seed = m.seed;
  req.steps = m.T;
  req.run = run_config(m);
  req.gamma = m.gamma;
  req.inversion = m.inversion;
  req.attn_fusion = m.attn_fusion;
  return req;
}

inline bool is_analytic_canvas(const DiffusionBackend& backend) {
  const auto& c = backend.capabilities();
  return c.image_height == analytic::kCanvas && c.image_width == analytic::kCanvas && c.image_channels == 3;
}

/// Toy evaluators matching the analytic face layout.
struct ToyEvaluators {
  analytic::AttributeScorer scorer;
  analytic::WholeImageDetector detector;
  analytic::SkinMarkEmbedder embedder;
  analytic::MeanAbsDistance distance;
};

inline std::string fmt_opt(const std::optional<double>& v, bool sign = false) { return v ? format2(*v, sign) : "NA"; }

struct EnhanceOutcome {
  PipelineResult result;
  fs::path dir;
};

/// Writes the artifact bundle of one pipeline run.
inline void write_bundle(const fs::path& dir, const RunManifest& m, const PipelineResult& r, const Image& reference,
                         const DiffusionBackend& backend, bool debug_dump) {
  fs::create_directories(dir);
  io::write_png(dir / "images" / "fd.png", r.i_f());
  io::write_png(dir / "images" / "pd.png", r.i_p());
  io::write_png(dir / "images" / "nb.png", r.i_nb());
  io::write_png(dir / "images" / "out.png", r.i_out());
  io::write_png(dir / "images" / "ref.png", reference);
  for (const auto& [id, mask] : r.mask.per_attribute) io::write_png(dir / "masks" / (id + ".png"), mask);
  io::write_png(dir / "masks" / "merged.png", r.mask.merged);
  for (const auto& [id, h] : r.attention) {
    io::write_tensor(dir / "attn" / (id + ".fct"), io::to_tensor(h));
    io::write_png(dir / "attn" / (id + ".png"), h);
  }

  Json report = Json::object();
  report["prompt"] = m.prompt;
  report["backend"] = m.backend;
  report["seed"] = m.seed;
  report["T"] = m.T;
  report["identity"] = m.identity.key();
  report["localized_attributes"] = r.plan.localized_attributes;
  report["abstract_attributes"] = r.plan.abstract_attributes;
  report["template_prompt"] = r.plan.template_spec.text();
  report["augmented_prompt"] = r.plan.augmented_spec.text();
  report["attention_available"] = r.attention_available;
  Json masks = Json::object();
  for (const auto& [id, mask] : r.mask.per_attribute) {
    double s = 0.0;
    for (double v : mask.values()) s += v;
    masks[id] = {{"coverage_pct", format2(100.0 * s / static_cast<double>(mask.size()))}};
  }
  report["masks"] = masks;
  const bool stage3 = !r.plan.abstract_attributes.empty();
  report["inversion"] = {{"ran", stage3},
                         {"step", stage3 ? r.inversion_step : 0},
                         {"iterations", r.inversion.iterations},
                         {"converged", r.inversion.worst_residual <= m.inversion.tolerance * 1e3}};
  report["deviation_out_vs_nb_x100"] = format2(100.0 * mean_abs_diff(r.i_out().values(), r.i_nb().values()));
  if (is_analytic_canvas(backend)) {
    const ToyEvaluators ev;
    Json metrics = Json::object();
    for (const auto& [name, img] : {std::pair<const char*, const Image*>{"pd", &r.i_p()}, {"nb", &r.i_nb()},
                                    {"out", &r.i_out()}, {"fd", &r.i_f()}}) {
      const Image q = io::quantize(*img);
      metrics[name] = {{"pc", format2(prompt_consistency(q, m.prompt, ev.scorer))},
                       {"if", fmt_opt(identity_fidelity(q, io::quantize(reference), ev.detector, ev.embedder))}};
    }
    report["toy_metrics"] = metrics;
  }
  {
    std::ofstream f(dir / "report.json", std::ios::trunc);
    require(static_cast<bool>(f), ErrorKind::io, "cannot write report");
    f << report.dump(2) << "\n";
  }
  save_manifest(dir / "manifest.json", m);

  if (debug_dump) {
    auto stack = [](const std::vector<LatentState>& traj) {
      require(!traj.empty(), ErrorKind::invalid_state, "trajectory was not kept");
      Shape shape{traj.size()};
      for (auto d : traj.front().z.shape()) shape.push_back(d);
      std::vector<double> data;
      for (const auto& s : traj) data.insert(data.end(), s.z.values().begin(), s.z.values().end());
      return Tensor(std::move(shape), std::move(data));
    };
    io::write_tensor(dir / "debug" / "fd_trajectory.fct", stack(r.blended.fd.trajectory));
    io::write_tensor(dir / "debug" / "nb_trajectory.fct", stack(r.blended.pd.trajectory));
    io::write_tensor(dir / "debug" / "latent_mask.fct", io::to_tensor(r.latent_mask));
    std::ofstream f(dir / "debug" / "blend_log.txt", std::ios::trunc);
    for (const auto& e : r.blended.log)
      f << "step=" << e.step << " t=" << e.t << " blended=" << (e.blended ? 1 : 0)
        << " mask_mean=" << format2(e.mask_mean) << "\n";
  }
}

inline EnhanceOutcome cmd_enhance(const RunManifest& m, std::optional<fs::path> out = std::nullopt,
                                  bool debug_dump = false, const fs::path& base_dir = {}) {
  const auto backend = make_backend(m);
  const auto parser = make_parser(m);
  const Image reference = reference_image(m, base_dir);
  PipelineRequest req = make_request(m, reference);
  req.run.keep_trajectory = debug_dump;
  EnhanceOutcome o{freecure_pipeline(req, *backend, *parser), out.value_or(fs::path(m.output_dir))};
  write_bundle(o.dir, m, o.result, reference, *backend, debug_dump);
  return o;
}

/// Images side by side with a 2-pixel white gutter; rows stack vertically.
inline Image contact_sheet(const std::vector<std::vector<Image>>& rows) {
  require(!rows.empty() && !rows.front().empty(), ErrorKind::invalid_argument, "contact sheet needs images");
  const std::size_t h = rows.front().front().height(), w = rows.front().front().width(), gap = 2;
  std::size_t cols = 0;
  for (const auto& r : rows) cols = std::max(cols, r.size());
  Image sheet(3, rows.size() * (h + gap) + gap, cols * (w + gap) + gap, 1.0);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const Image& img = rows[r][c];
      require(img.height() == h && img.width() == w, ErrorKind::invalid_argument, "contact sheet images differ in size");
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x)
            sheet.at(k, gap + r * (h + gap) + y, gap + c * (w + gap) + x) =
                img.at(img.channels() == 3 ? k : 0, y, x);
    }
  return sheet;
}

inline Image gray_to_image(const GrayMap& g) {
  Image img(3, g.height(), g.width());
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t y = 0; y < g.height(); ++y)
      for (std::size_t x = 0; x < g.width(); ++x) img.at(k, y, x) = g.at(y, x);
  return img;
}

struct SweepOutcome {
  std::vector<double> values;
  std::vector<double> deviation;  // gamma: mean |I_out - I_nb|; alpha: mean |PD - FD|
  fs::path dir;
};

inline SweepOutcome cmd_sweep(const RunManifest& m, const std::string& param, const std::vector<double>& values,
                              std::optional<fs::path> out = std::nullopt, const fs::path& base_dir = {}) {
  require(param == "alpha" || param == "gamma", ErrorKind::invalid_argument, "--param must be alpha or gamma");
  require(!values.empty(), ErrorKind::invalid_argument, "sweep needs at least one value");
  for (double v : values)
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorKind::invalid_argument,
            param + " values must lie in [0,1]");
  SweepOutcome o{values, {}, out.value_or(fs::path(m.output_dir) / ("sweep_" + param))};
  fs::create_directories(o.dir);
  std::ofstream csv;
  std::vector<std::vector<Image>> sheet(2);

  if (param == "gamma") {
    for (double g : values) {
      RunManifest mg = m;
      mg.gamma = g;
      const auto res = cmd_enhance(mg, o.dir / ("gamma_" + value_label(g)), false, base_dir);
      o.deviation.push_back(mean_abs_diff(res.result.i_out().values(), res.result.i_nb().values()));
      if (sheet[0].empty()) sheet[0].push_back(res.result.i_nb());
      sheet[1].push_back(res.result.i_out());
    }
  } else {
    const auto backend = make_backend(m);
    const Image reference = reference_image(m, base_dir);
    const auto sched = build_schedule(ScheduleKind::linear, m.T);
    const auto encoded = encode_prompt(m.prompt, *backend, prompt_attributes(m));
    IdentityEmbedding id = encode_identity(reference, *backend);
    id.source_ref = m.identity.key();
    const auto fused = fuse_identity(encoded.bundle, id);
    const auto z_T = sample_initial_latent(m.seed, backend->capabilities().latent_shape, sched);
    const auto sw = run_interpolation_sweep(z_T, encoded.bundle, fused, values, m.sweep_blocks, run_config(m),
                                            *backend, sched);
    io::write_png(o.dir / "fd.png", sw.fd.image);
    sheet[0].push_back(sw.fd.image);
    for (const auto& e : sw.entries) {
      const fs::path d = o.dir / ("alpha_" + value_label(e.alpha));
      io::write_png(d / "pd.png", e.pd.image);
      io::write_png(d / "identity_map.png", e.identity_map);
      io::write_tensor(d / "identity_map.fct", io::to_tensor(e.identity_map));
      o.deviation.push_back(mean_abs_diff(e.pd.image.values(), sw.fd.image.values()));
      sheet[0].push_back(e.pd.image);
      sheet[1].push_back(gray_to_image(e.identity_map));
    }
    save_manifest(o.dir / "manifest.json", m);
  }
  io::write_png(o.dir / "contact_sheet.png", contact_sheet(sheet));
  csv.open(o.dir / "sweep.csv", std::ios::trunc);
  csv << param << (param == "gamma" ? ",deviation_out_vs_nb_x100\n" : ",deviation_pd_vs_fd_x100\n");
  for (std::size_t i = 0; i < values.size(); ++i)
    csv << value_label(values[i]) << "," << format2(100.0 * o.deviation[i]) << "\n";
  return o;
}

inline void cmd_dump_attn(const RunManifest& m, std::size_t token, std::optional<fs::path> out = std::nullopt,
                          const fs::path& base_dir = {}) {
  const auto backend = make_backend(m);
  const auto& caps = backend->capabilities();
  require(caps.supports_attention_capture, ErrorKind::capability,
          "backend '" + caps.name + "' does not expose cross-attention");
  const fs::path dir = out.value_or(fs::path(m.output_dir) / "attn_dump");
  const Image reference = reference_image(m, base_dir);
  const auto sched = build_schedule(ScheduleKind::linear, m.T);
  const auto encoded = encode_prompt(m.prompt, *backend, prompt_attributes(m));
  require(token < encoded.spec.tokens().size(), ErrorKind::invalid_argument,
          "token index " + std::to_string(token) + " outside prompt of " +
              std::to_string(encoded.spec.tokens().size()) + " tokens");
  const auto fused = fuse_identity(encoded.bundle, encode_identity(reference, *backend));
  const auto z_T = sample_initial_latent(m.seed, caps.latent_shape, sched);
  const std::set<BlockGroup> all{BlockGroup::down, BlockGroup::mid, BlockGroup::up};
  CaptureSession fd(RunTag::fd, all), pd(RunTag::pd, all);
  const RunConfig cfg = run_config(m);
  run_fd(z_T, encoded.bundle, cfg, *backend, sched, {&fd, nullptr});
  run_pd(z_T, encoded.bundle, fused, cfg, *backend, sched, {&pd, nullptr});
  for (const auto* session : {&fd, &pd}) {
    const std::string tag = session == &fd ? "fd" : "pd";
    for (auto g : all) {
      const std::string base = "token" + std::to_string(token) + "_" + tag + "_" + std::string(to_string(g));
      const auto h = aggregate_attribute_map(*session, {token}, caps.image_height, caps.image_width, {}, {g});
      io::write_png(dir / (base + ".png"), h);
      io::write_tensor(dir / (base + ".fct"), io::to_tensor(h));
    }
  }
}

// ---------------------------------------------------------------------------------------------
// Evaluation

struct RunScore {
  std::string name;
  std::string identity;
  int attribute_count = 0;
  double pc_baseline = 0.0;
  double pc_enhanced = 0.0;
  std::optional<double> if_baseline;
  std::optional<double> if_enhanced;
};

struct EvalOutcome {
  std::vector<RunScore> runs;
  MetricsReport baseline;
  MetricsReport enhanced;  // with composite and deltas
  GroupedSummary grouped_baseline;
  GroupedSummary grouped_enhanced;
};

/// Run directories (those holding manifest.json and images/out.png) under root, sorted.
inline std::vector<fs::path> find_runs(const fs::path& root) {
  require(fs::is_directory(root), ErrorKind::io, "runs directory " + root.string() + " does not exist");
  std::vector<fs::path> runs;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() == "manifest.json" &&
        fs::exists(e.path().parent_path() / "images" / "out.png"))
      runs.push_back(fs::relative(e.path().parent_path(), root));
  std::sort(runs.begin(), runs.end());
  return runs;
}

inline EvalOutcome evaluate_runs(const fs::path& root, std::optional<std::uint64_t> face_div_seed = std::nullopt) {
  const ToyEvaluators ev;
  EvalOutcome o;
  std::vector<DiversityItem> div_base, div_enh;
  std::optional<std::uint64_t> seed = face_div_seed;
  for (const auto& rel : find_runs(root)) {
    const fs::path dir = root / rel;
    const RunManifest m = load_manifest(dir / "manifest.json");
    if (!seed) seed = m.face_div_seed;
    const Image pd = io::read_png(dir / "images" / "pd.png");
    const Image out = io::read_png(dir / "images" / "out.png");
    const Image ref = io::read_png(dir / "images" / "ref.png");
    RunScore s;
    s.name = rel.generic_string();
    s.identity = m.identity.key();
    s.attribute_count = static_cast<int>(m.attributes.size());
    s.pc_baseline = prompt_consistency(pd, m.prompt, ev.scorer);
    s.pc_enhanced = prompt_consistency(out, m.prompt, ev.scorer);
    s.if_baseline = identity_fidelity(pd, ref, ev.detector, ev.embedder);
    s.if_enhanced = identity_fidelity(out, ref, ev.detector, ev.embedder);
    div_base.push_back({s.name, s.identity, pd});
    div_enh.push_back({s.name, s.identity, out});
    o.runs.push_back(std::move(s));
  }
  require(!o.runs.empty(), ErrorKind::io, "no run bundles found under " + root.string());

  auto summarize = [&](bool enhanced, std::vector<DiversityItem> items) {
    MetricsReport r;
    double pc = 0.0, idf = 0.0;
    std::size_t n_if = 0;
    for (const auto& s : o.runs) {
      pc += enhanced ? s.pc_enhanced : s.pc_baseline;
      const auto& v = enhanced ? s.if_enhanced : s.if_baseline;
      if (v) {
        idf += *v;
        ++n_if;
      } else {
        ++r.if_missing;
      }
    }
    r.count = o.runs.size();
    r.pc = pc / static_cast<double>(o.runs.size());
    if (n_if) r.if_score = idf / static_cast<double>(n_if);
    r.face_div = face_diversity(std::move(items), ev.distance, seed.value_or(0));
    return r;
  };
  o.baseline = with_composite(summarize(false, std::move(div_base)));
  o.enhanced = composite_and_deltas(o.baseline, summarize(true, std::move(div_enh)));

  std::vector<GroupedRecord> gb, ge;
  for (const auto& s : o.runs) {
    if (s.attribute_count < 1 || s.attribute_count > 3) continue;
    gb.push_back({s.attribute_count, s.pc_baseline});
    ge.push_back({s.attribute_count, s.pc_enhanced});
  }
  o.grouped_baseline = grouped_summary(gb);
  o.grouped_enhanced = grouped_summary(ge);
  return o;
}

inline fs::path sibling_with_suffix(const fs::path& report, const std::string& suffix) {
  fs::path p = report;
  p.replace_extension();
  return p.string() + suffix;
}

inline EvalOutcome cmd_eval(const fs::path& runs_dir, const fs::path& report_path) {
  EvalOutcome o = evaluate_runs(runs_dir);
  if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path());
  std::ofstream rep(report_path, std::ios::trunc);
  require(static_cast<bool>(rep), ErrorKind::io, "cannot write report " + report_path.string());
  rep << "runs: " << o.runs.size() << "\n";
  for (const auto& [tag, r] : {std::pair<const char*, const MetricsReport*>{"baseline", &o.baseline},
                               {"freecure", &o.enhanced}}) {
    rep << tag << ".pc: " << fmt_opt(r->pc) << "\n";
    rep << tag << ".if: " << fmt_opt(r->if_score) << "\n";
    rep << tag << ".if_missing: " << r->if_missing << "\n";
    rep << tag << ".face_div: " << fmt_opt(r->face_div) << "\n";
    rep << tag << ".pc_times_if: " << fmt_opt(r->pc_times_if) << "\n";
  }
  for (const char* k : {"pc", "if", "face_div", "pc_times_if"})
    rep << "freecure.delta_pct." << k << ": " << fmt_opt(o.enhanced.deltas.at(k), true) << "\n";
  std::map<int, const GroupedRow*> base_rows;
  for (const auto& row : o.grouped_baseline.rows) base_rows[row.bucket] = &row;
  for (const auto& row : o.grouped_enhanced.rows) {
    const std::string p = "bucket" + std::to_string(row.bucket);
    rep << p << ".count: " << row.count << "\n";
    rep << p << ".baseline_pc: " << format2(base_rows.at(row.bucket)->mean_pc) << "\n";
    rep << p << ".freecure_pc: " << format2(row.mean_pc) << "\n";
  }
  rep << "overall.baseline_pc: " << fmt_opt(o.grouped_baseline.overall) << "\n";
  rep << "overall.freecure_pc: " << fmt_opt(o.grouped_enhanced.overall) << "\n";
  for (const auto& n : o.grouped_enhanced.notices) rep << "notice: " << n << "\n";

  std::ofstream t1(sibling_with_suffix(report_path, ".table1.csv"), std::ios::trunc);
  t1 << "method,pc,if,face_div,pc_times_if,pc_delta_pct,if_delta_pct,face_div_delta_pct,pc_times_if_delta_pct\n";
  t1 << "baseline," << fmt_opt(o.baseline.pc) << "," << fmt_opt(o.baseline.if_score) << ","
     << fmt_opt(o.baseline.face_div) << "," << fmt_opt(o.baseline.pc_times_if) << ",,,,\n";
  t1 << "freecure," << fmt_opt(o.enhanced.pc) << "," << fmt_opt(o.enhanced.if_score) << ","
     << fmt_opt(o.enhanced.face_div) << "," << fmt_opt(o.enhanced.pc_times_if);
  for (const char* k : {"pc", "if", "face_div", "pc_times_if"}) t1 << "," << fmt_opt(o.enhanced.deltas.at(k), true);
  t1 << "\n";

  std::ofstream t2(sibling_with_suffix(report_path, ".table2.csv"), std::ios::trunc);
  t2 << "attributes,count,baseline_pc,freecure_pc\n";
  for (const auto& row : o.grouped_enhanced.rows)
    t2 << row.bucket << "," << row.count << "," << format2(base_rows.at(row.bucket)->mean_pc) << ","
       << format2(row.mean_pc) << "\n";
  t2 << "overall," << o.runs.size() << "," << fmt_opt(o.grouped_baseline.overall) << ","
     << fmt_opt(o.grouped_enhanced.overall) << "\n";

  std::ofstream per(sibling_with_suffix(report_path, ".runs.csv"), std::ios::trunc);
  per << "run,attributes,pc_baseline,pc_freecure,if_baseline,if_freecure\n";
  for (const auto& s : o.runs)
    per << s.name << "," << s.attribute_count << "," << format2(s.pc_baseline) << "," << format2(s.pc_enhanced) << ","
        << fmt_opt(s.if_baseline) << "," << fmt_opt(s.if_enhanced) << "\n";
  return o;
}

// ---------------------------------------------------------------------------------------------
// Corpus runs

inline constexpr std::uint64_t kCorpusIdentities = 4;

/// Manifest for corpus prompt i: seed 100 + i, identity seed 1 + (i mod 4).
inline RunManifest corpus_manifest(const CorpusPrompt& p, std::size_t index, const DiffusionBackend& backend) {
  RunManifest m;
  m.seed = 100 + index;
  m.prompt = p.text;
  m.identity = {analytic::SyntheticFaceSpec{1 + index % kCorpusIdentities, {}}, std::nullopt};
  const auto tokens = backend.tokenize(p.text);
  auto tok = [&backend](std::string_view s) { return backend.tokenize(s); };
  for (const auto& a : p.attributes)
    m.attributes.push_back({a.id, a.id, find_phrase(tokens, a.phrase, tok), a.route, MaskSource::parsing, a.labels});
  return m;
}

/// Runs the whole corpus into root/pNN and returns the run directories.
inline std::vector<fs::path> cmd_corpus(const fs::path& root) {
  const analytic::AnalyticBackend backend;
  std::vector<fs::path> dirs;
  const auto& corpus = evaluation_corpus();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char name[8];
    std::snprintf(name, sizeof name, "p%02zu", i);
    RunManifest m = corpus_manifest(corpus[i], i, backend);
    m.output_dir = (root / name).generic_string();
    dirs.push_back(root / name);
    cmd_enhance(m, dirs.back());
  }
  return dirs;
}

}  // namespace freecure
