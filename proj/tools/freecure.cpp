// Command-line front end: enhance, sweep, eval, dump-attn, corpus.

#include <CLI11.hpp>

#include <iostream>

#include "freecure/freecure.hpp"

namespace fs = std::filesystem;
using namespace freecure;

int main(int argc, char** argv) {
  CLI::App app{"Training-free attribute restoration for personalized diffusion"};
  app.require_subcommand(1);

  std::string manifest_path, out_dir, param, values, runs_dir, report_path;
  bool debug_dump = false;
  std::size_t token = 0;

  auto* enhance = app.add_subcommand("enhance", "Run the full pipeline and write an artifact bundle");
  enhance->add_option("--manifest", manifest_path, "Run manifest (JSON)")->required();
  enhance->add_option("--out", out_dir, "Output directory (default: manifest output_dir)");
  enhance->add_flag("--debug-dump", debug_dump, "Also dump trajectories and the blend log");

  auto* sweep = app.add_subcommand("sweep", "Sweep alpha (identity interpolation) or gamma (inversion depth)");
  sweep->add_option("--manifest", manifest_path, "Run manifest (JSON)")->required();
  sweep->add_option("--param", param, "alpha or gamma")->required()->check(CLI::IsMember({"alpha", "gamma"}));
  sweep->add_option("--values", values, "Comma-separated values in [0,1]")->required();
  sweep->add_option("--out", out_dir, "Output directory");

  auto* eval = app.add_subcommand("eval", "Score a directory of run bundles");
  eval->add_option("--runs", runs_dir, "Directory holding run bundles")->required();
  eval->add_option("--report", report_path, "Report path (key-value text; CSV tables are written beside it)")
      ->required();

  auto* dump = app.add_subcommand("dump-attn", "Dump aggregated cross-attention maps of one token");
  dump->add_option("--manifest", manifest_path, "Run manifest (JSON)")->required();
  dump->add_option("--token", token, "Token index")->required();
  dump->add_option("--out", out_dir, "Output directory");

  auto* corpus = app.add_subcommand("corpus", "Run the evaluation corpus on the analytic backend");
  corpus->add_option("--out", out_dir, "Root directory for the run bundles")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto out_opt = [&]() -> std::optional<fs::path> {
    if (out_dir.empty()) return std::nullopt;
    return fs::path(out_dir);
  };
  try {
    if (*enhance) {
      const auto m = load_manifest(manifest_path);
      const auto o = cmd_enhance(m, out_opt(), debug_dump, fs::path(manifest_path).parent_path());
      std::cout << "wrote " << o.dir.string() << "\n";
    } else if (*sweep) {
      const auto m = load_manifest(manifest_path);
      const auto o = cmd_sweep(m, param, parse_values(values), out_opt(), fs::path(manifest_path).parent_path());
      std::cout << "wrote " << o.dir.string() << "\n";
    } else if (*eval) {
      const auto o = cmd_eval(runs_dir, report_path);
      std::cout << "scored " << o.runs.size() << " runs into " << report_path << "\n";
    } else if (*dump) {
      const auto m = load_manifest(manifest_path);
      cmd_dump_attn(m, token, out_opt(), fs::path(manifest_path).parent_path());
      std::cout << "wrote attention maps\n";
    } else if (*corpus) {
      const auto dirs = cmd_corpus(out_dir);
      std::cout << "wrote " << dirs.size() << " runs under " << out_dir << "\n";
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
