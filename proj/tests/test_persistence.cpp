#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "support.hpp"

using namespace fixtures;

namespace {

std::string manifest_error(const std::string& text) {
  try {
    parse_manifest(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::manifest);
    return e.what();
  }
  ADD_FAILURE() << "manifest accepted: " << text;
  return {};
}

int run_cli(const std::string& args, const std::string& env = {}) {
  const std::string cmd = env + (env.empty() ? "" : " ") + std::string(FREECURE_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), {}};
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

struct EnvGuard {
  std::string old;
  bool had;
  explicit EnvGuard(const char* value) : had(std::getenv(kBackendPathEnv) != nullptr) {
    if (had) old = std::getenv(kBackendPathEnv);
    setenv(kBackendPathEnv, value, 1);
  }
  ~EnvGuard() {
    if (had) setenv(kBackendPathEnv, old.c_str(), 1);
    else unsetenv(kBackendPathEnv);
  }
};

const std::string kMinimal = R"({"prompt": "a <S> with black curly hair", "backend": "analytic", "seed": 3})";

}  // namespace

TEST(Manifest, MinimalGetsDefaults) {
  const auto m = parse_manifest(kMinimal);
  EXPECT_EQ(m.T, 50);
  EXPECT_DOUBLE_EQ(m.gamma, 0.45);
  EXPECT_EQ(m.identity_injection_step, 10);
  EXPECT_EQ(m.blend_start_step, 10);
  EXPECT_EQ(m.seed, 3u);
  const auto j = manifest_to_json(m);
  EXPECT_EQ(j.at("T"), 50);
  EXPECT_EQ(j.at("gamma"), 0.45);
  EXPECT_TRUE(j.at("backend_options").contains("prior_spread"));
}

TEST(Manifest, RoundTripIsStable) {
  const auto m = load_manifest(demo_manifest_path());
  const std::string once = serialize_manifest(m);
  EXPECT_EQ(parse_manifest(once), m);
  EXPECT_EQ(serialize_manifest(parse_manifest(once)), once);
}

TEST(Manifest, DemoSpansMatchPhrases) {
  const auto m = load_manifest(demo_manifest_path());
  const analytic::AnalyticBackend b;
  const auto toks = b.tokenize(m.prompt);
  auto tok = [&b](std::string_view s) { return b.tokenize(s); };
  ASSERT_EQ(m.attributes.size(), 2u);
  EXPECT_EQ(m.attributes[0].token_span, find_phrase(toks, "black curly hair", tok));
  EXPECT_EQ(m.attributes[1].token_span, find_phrase(toks, "laughing happily", tok));
}

TEST(Manifest, Diagnostics) {
  EXPECT_NE(manifest_error(R"({"backend": "analytic", "seed": 1})").find("$.prompt"), std::string::npos);
  EXPECT_NE(manifest_error(R"({"prompt": "a <S>", "backend": "analytic"})").find("$.seed"), std::string::npos);
  EXPECT_NE(manifest_error(R"({"prompt": "a <S>", "backend": "analytic", "seed": 1, "gama": 0.4})").find("gama"),
            std::string::npos);
  EXPECT_NE(manifest_error(R"({"prompt": "a <S>", "backend": "analytic", "seed": 1, "gamma": "x"})").find("$.gamma"),
            std::string::npos);
  const auto overlap = manifest_error(R"({"prompt": "a <S> with black curly hair", "backend": "analytic", "seed": 1,
      "attributes": [{"id": "hair", "token_span": [3, 6], "parser_labels": [17]},
                     {"id": "curl", "token_span": [4, 5], "parser_labels": [17]}]})");
  EXPECT_NE(overlap.find("hair"), std::string::npos);
  EXPECT_NE(overlap.find("curl"), std::string::npos);
  const auto span = manifest_error(R"({"prompt": "a <S>", "backend": "analytic", "seed": 1,
      "attributes": [{"id": "hair", "token_span": [3], "parser_labels": [17]}]})");
  EXPECT_NE(span.find("$.attributes[0].token_span"), std::string::npos);
  EXPECT_NE(manifest_error(R"({"prompt": "a <S>", "backend": "magic", "seed": 1})").find("$.backend"),
            std::string::npos);
  EXPECT_THROW(parse_manifest("{not json"), Error);
}

TEST(Fct, ScalarLayout) {
  const auto bytes = io::encode_fct(Tensor({1}, std::vector<double>{1.0}));
  ASSERT_EQ(bytes.size(), 16u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FCT1");
  const std::vector<unsigned char> tail(bytes.end() - 4, bytes.end());
  EXPECT_EQ(tail, (std::vector<unsigned char>{0x00, 0x00, 0x80, 0x3F}));
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 1);
}

TEST(Fct, RandomRoundTrip) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 10.0);
  for (int c = 0; c < 1000; ++c) {
    Shape shape;
    const std::size_t rank = 1 + rng() % 4;
    for (std::size_t i = 0; i < rank; ++i) shape.push_back(1 + rng() % 5);
    Tensor t(shape);
    for (auto& v : t.values()) v = static_cast<double>(static_cast<float>(n(rng)));
    ASSERT_EQ(io::decode_fct(io::encode_fct(t)), t);
  }
}

TEST(Fct, FormatErrors) {
  auto bytes = io::encode_fct(Tensor({2, 2}, 0.5));
  auto expect_format = [](const std::vector<unsigned char>& b) {
    try {
      io::decode_fct(b);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::format);
    }
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  expect_format(bad_magic);
  expect_format({bytes.begin(), bytes.end() - 1});
  expect_format({bytes.begin(), bytes.begin() + 6});
  auto extra = bytes;
  extra.push_back(0);
  expect_format(extra);
  EXPECT_THROW(io::encode_fct(Tensor({2}, std::numeric_limits<double>::quiet_NaN())), Error);
}

TEST(Png, RoundTripQuantized) {
  const fs::path dir = temp_dir("png");
  const Image img = analytic::render_target({4, {{"glasses", "dark"}}});
  io::write_png(dir / "a.png", img);
  EXPECT_EQ(io::read_png(dir / "a.png"), io::quantize(img));
  GrayMap g(5, 7);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(i) / 34.0;
  io::write_png(dir / "g.png", g);
  const GrayMap back = io::read_png_gray(dir / "g.png");
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(back[i], g[i], 0.5 / 255.0 + 1e-12);
  write_text(dir / "bad.png", "not a png");
  try {
    io::read_png(dir / "bad.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::format);
  }
  fs::remove_all(dir);
}

TEST(Plugin, ExternalBackendMatchesBuiltin) {
  EnvGuard env(FREECURE_PLUGIN_DIR);
  auto m = hair_manifest();
  const fs::path dir = temp_dir("plugin");
  const auto builtin = cmd_enhance(m, dir / "builtin");
  m.backend = "external:testanalytic";
  m.backend_options = manifest_detail::analytic_options_json({});
  const auto external = cmd_enhance(m, dir / "external");
  EXPECT_EQ(builtin.result.i_out(), external.result.i_out());
  EXPECT_EQ(tree_hash(dir / "builtin" / "images"), tree_hash(dir / "external" / "images"));
  fs::remove_all(dir);
}

TEST(Plugin, MissingLibraryIsCapabilityError) {
  EnvGuard env("/nonexistent");
  auto m = hair_manifest();
  m.backend = "external:testanalytic";
  try {
    make_backend(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::capability);
  }
}

TEST(Cli, EnhanceDemoWritesBundle) {
  const fs::path dir = temp_dir("cli_enhance");
  ASSERT_EQ(run_cli("enhance --manifest " + demo_manifest_path().string() + " --out " + dir.string()), 0);
  for (const char* f : {"images/fd.png", "images/pd.png", "images/nb.png", "images/out.png", "masks/merged.png",
                        "report.json", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_EQ(load_manifest(dir / "manifest.json"), load_manifest(demo_manifest_path()));
  fs::remove_all(dir);
}

TEST(Cli, DebugDumpWritesTrajectories) {
  const fs::path dir = temp_dir("cli_debug");
  ASSERT_EQ(run_cli("enhance --debug-dump --manifest " + demo_manifest_path().string() + " --out " + dir.string()), 0);
  const Tensor traj = io::read_tensor(dir / "debug" / "nb_trajectory.fct");
  EXPECT_EQ(traj.shape(), (Shape{51, 4, 32, 32}));
  EXPECT_NE(read_text(dir / "debug" / "blend_log.txt").find("step=49"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, GammaZeroSweepKeepsBlendedImage) {
  const fs::path dir = temp_dir("cli_sweep");
  ASSERT_EQ(run_cli("sweep --manifest " + demo_manifest_path().string() + " --param gamma --values 0 --out " +
                    dir.string()),
            0);
  const Image out = io::read_png(dir / "gamma_0" / "images" / "out.png");
  const Image nb = io::read_png(dir / "gamma_0" / "images" / "nb.png");
  EXPECT_LE(mean_squared_error(out.values(), nb.values()), 1e-4);
  EXPECT_TRUE(fs::exists(dir / "contact_sheet.png"));
  EXPECT_TRUE(fs::exists(dir / "sweep.csv"));
  fs::remove_all(dir);
}

TEST(Cli, AlphaSweepAndDumpAttn) {
  const fs::path dir = temp_dir("cli_alpha");
  ASSERT_EQ(run_cli("sweep --manifest " + demo_manifest_path().string() + " --param alpha --values 0,1 --out " +
                    (dir / "s").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "s" / "alpha_1" / "pd.png"));
  EXPECT_TRUE(fs::exists(dir / "s" / "alpha_1" / "identity_map.fct"));
  ASSERT_EQ(run_cli("dump-attn --manifest " + demo_manifest_path().string() + " --token 5 --out " +
                    (dir / "d").string()),
            0);
  const Tensor h = io::read_tensor(dir / "d" / "token5_fd_up.fct");
  EXPECT_EQ(h.shape(), (Shape{64, 64}));
  fs::remove_all(dir);
}

TEST(Cli, EvalGroupsRuns) {
  const fs::path dir = temp_dir("cli_eval");
  const analytic::AnalyticBackend b;
  const auto& corpus = evaluation_corpus();
  // One run per bucket size.
  std::map<int, double> want;
  for (std::size_t i : {0u, 8u, 16u}) {
    auto m = corpus_manifest(corpus[i], i, b);
    cmd_enhance(m, dir / "runs" / ("p" + std::to_string(i)));
    const analytic::AttributeScorer scorer;
    want[static_cast<int>(m.attributes.size())] =
        prompt_consistency(io::read_png(dir / "runs" / ("p" + std::to_string(i)) / "images/out.png"), m.prompt, scorer);
  }
  ASSERT_EQ(run_cli("eval --runs " + (dir / "runs").string() + " --report " + (dir / "r.txt").string()), 0);
  const std::string t2 = read_text(dir / "r.table2.csv");
  for (const auto& [bucket, pc] : want)
    EXPECT_NE(t2.find(std::to_string(bucket) + ",1,"), std::string::npos) << t2;
  for (const auto& [bucket, pc] : want) EXPECT_NE(t2.find(format2(pc)), std::string::npos) << t2;
  EXPECT_TRUE(fs::exists(dir / "r.table1.csv"));
  fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = temp_dir("cli_codes");
  EXPECT_EQ(run_cli(""), kExitUsage);
  EXPECT_EQ(run_cli("enhance"), kExitUsage);
  write_text(dir / "bad.json", R"({"prompt": "a <S>", "backend": "analytic"})");
  EXPECT_EQ(run_cli("enhance --manifest " + (dir / "bad.json").string()), kExitUsage);
  EXPECT_EQ(run_cli("enhance --manifest " + (dir / "missing.json").string()), kExitIo);
  write_text(dir / "ext.json",
             R"({"prompt": "a <S> with black curly hair", "backend": "external:nothing", "seed": 1})");
  EXPECT_EQ(run_cli("enhance --manifest " + (dir / "ext.json").string()), kExitCapability);
  write_text(dir / "nocap.json", R"({"prompt": "a <S> with black curly hair", "backend": "external:testanalytic",
      "backend_options": {"supports_capture": false}, "seed": 1})");
  const std::string env = std::string(kBackendPathEnv) + "=" + FREECURE_PLUGIN_DIR;
  EXPECT_EQ(run_cli("dump-attn --token 3 --manifest " + (dir / "nocap.json").string() + " --out " +
                        (dir / "d").string(),
                    env),
            kExitCapability);
  write_text(dir / "noph.json", R"({"prompt": "a man", "backend": "analytic", "seed": 1})");
  EXPECT_EQ(run_cli("enhance --manifest " + (dir / "noph.json").string() + " --out " + (dir / "o").string()),
            kExitUsage);
  EXPECT_EQ(run_cli("sweep --manifest " + demo_manifest_path().string() + " --param alpha --values 2 --out " +
                    (dir / "s").string()),
            kExitUsage);
  fs::remove_all(dir);
}
