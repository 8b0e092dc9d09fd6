#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "hoigen/cli/commands.hpp"
#include "hoigen/cli/config.hpp"
#include "hoigen/core/error.hpp"

using namespace hoigen;
using namespace hoigen::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("hoigen_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "hoigen");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("configuration keys") {
  RunConfig cfg;
  set_config_value(cfg, "epsilon", "0.02");
  set_config_value(cfg, "seed", "17");
  set_config_value(cfg, "impose_known", "true");
  CHECK(cfg.epsilon == 0.02);
  CHECK(*cfg.seed == 17);
  CHECK(cfg.impose_known);
  CHECK_THROWS_AS(set_config_value(cfg, "epsilonn", "1"), ValidationError);
  CHECK_THROWS_AS(set_config_value(cfg, "window_keys", "eight"), ValidationError);
  CHECK_THROWS_AS(apply_config_text(cfg, "no equals sign\n"), ValidationError);
  CHECK(environment_name("input") == "HOIGEN_INPUT");

  RunConfig again;
  apply_config_text(again, dump_config(cfg));
  CHECK(dump_config(again) == dump_config(cfg));
}

TEST_CASE("relative paths in a config file follow the file") {
  TempDir dir("paths");
  fs::create_directories(dir.path / "conf");
  write_text(dir.path / "conf" / "run.cfg", "# comment\n\ninput = data\noutput = /abs/out\nhidden = 32\n");
  RunConfig cfg;
  apply_config_file(cfg, dir.path / "conf" / "run.cfg");
  CHECK(cfg.input == dir.path / "conf" / "data");
  CHECK(cfg.output == fs::path("/abs/out"));
  CHECK(cfg.hidden == 32);
  CHECK_THROWS_AS(apply_config_file(cfg, dir.path / "missing.cfg"), ValidationError);
}

TEST_CASE("precedence: defaults, file, environment, flags") {
  TempDir dir("precedence");
  write_text(dir.path / "run.cfg", "output = from_file\nreference = from_file\nepsilon = 0.03\nhidden = 48\n");
  const std::string cfg = (dir.path / "run.cfg").string();

  ::setenv("HOIGEN_OUTPUT", "/env/out", 1);
  ::setenv("HOIGEN_EPSILON", "0.9", 1);  // not a path, ignored
  const auto r = run({"synth", "--config", cfg, "--hidden", "16", "--dump-config"});
  ::unsetenv("HOIGEN_OUTPUT");
  ::unsetenv("HOIGEN_EPSILON");
  REQUIRE(r.code == kExitOk);

  RunConfig seen;
  apply_config_text(seen, r.out);
  CHECK(seen.output == fs::path("/env/out"));
  CHECK(seen.reference == dir.path / "from_file");
  CHECK(seen.epsilon == 0.03);
  CHECK(seen.hidden == 16);
  CHECK(seen.mlp == RunConfig{}.mlp);
}

TEST_CASE("exit codes") {
  TempDir dir("exit");
  CHECK(run({"synth", "--help"}).code == kExitOk);
  CHECK(run({}).code == kExitValidation);
  CHECK(run({"frobnicate"}).code == kExitValidation);
  CHECK(run({"synth", "--no_such_key", "1"}).code == kExitValidation);

  const auto missing_seed = run({"synth", "--output", dir.path.string()});
  CHECK(missing_seed.code == kExitValidation);
  CHECK(missing_seed.err.find("seed") != std::string::npos);

  write_text(dir.path / "junk.hoi", "not a container");
  const auto bad = run({"extract", "--input", (dir.path / "junk.hoi").string(), "--output",
                        (dir.path / "out").string(), "--seed", "1"});
  CHECK(bad.code == kExitValidation);
  CHECK_FALSE(fs::exists(dir.path / "out"));

  const auto no_model = run({"sample", "--input", dir.path.string(), "--output", (dir.path / "s").string(),
                             "--checkpoint", (dir.path / "nothing.ckpt").string(), "--seed", "1"});
  CHECK(no_model.code != kExitOk);
}

TEST_CASE("reruns with the same seed are byte-identical") {
  TempDir dir("rerun");
  const auto a = dir.path / "a", b = dir.path / "b";
  for (const auto& out : {a, b}) {
    REQUIRE(run({"synth", "--seed", "5", "--synth_sequences", "3", "--output", out.string()}).code == kExitOk);
    REQUIRE(run({"extract", "--seed", "5", "--input", out.string(), "--output", (out / "keys").string()}).code ==
            kExitOk);
  }
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    REQUIRE(fs::exists(b / rel));
    CHECK(slurp(e.path()) == slurp(b / rel));
    ++files;
  }
  CHECK(files >= 9);

  const auto c = dir.path / "c";
  REQUIRE(run({"synth", "--seed", "6", "--synth_sequences", "3", "--output", c.string()}).code == kExitOk);
  CHECK(slurp(a / "seq_0000.hoi") != slurp(c / "seq_0000.hoi"));
}

}  // TEST_SUITE
