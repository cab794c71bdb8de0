#include <doctest.h>

#include <bqnet_cli/commands.hpp>
#include <bqnet_cli/config.hpp>
#include <bqnet_cli/tables.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace bqnet;
using namespace bqnet::cli;
namespace fs = std::filesystem;

namespace {

const fs::path models = BQNET_MODELS_DIR;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("bqnet_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_json(const std::string& name, const nlohmann::json& doc) {
  auto p = scratch() / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::string s(const fs::path& p) { return p.string(); }

}  // namespace

TEST_CASE("bundled configs load") {
  auto mm = load_config(models / "mm_infty.json");
  CHECK(mm.model.J() == 1);
  for (const char* name : {"tandem_a2.json", "constant_tandem.json", "zeta_batch.json", "log_weighted_batch.json"}) {
    CHECK_NOTHROW(load_config(models / name));
  }
  // queues L1..L3, NL, A, D, C, P, PC
  auto vivax = load_config(models / "vivax.json");
  CHECK(vivax.model.J() == 9);
  CHECK(vivax.model.nodes[5].service.is_absorbing());
  CHECK(slurp(models / "vivax.json").find("Placeholder") != std::string::npos);
  CHECK(load_config(models / "constant_tandem.json").kernel.representation ==
        KernelRepresentation::markov_uniformization);
}

TEST_CASE("config validation reports every problem with its path") {
  auto doc = read_json(models / "mm_infty.json");
  doc["nodes"][0]["routing"] = {0.0, 0.9};
  auto p = write_json("bad_routing.json", doc);
  try {
    load_config(p);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("nodes[0].routing") != std::string::npos);
  }
  auto r = run({"pmf", s(p), "--t", "1"});
  CHECK(r.code == exit_validation);
  CHECK(r.err.find("nodes[0].routing") != std::string::npos);

  auto multi = read_json(models / "tandem_a2.json");
  multi["arrival"].erase("base");
  multi["batch"]["size"]["mean"] = -1.0;
  multi["nodes"][1]["service"]["rate"] = "fast";
  try {
    load_config(write_json("multi.json", multi));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.problems().size() >= 3);
    std::string msg = e.what();
    CHECK(msg.find("arrival.base") != std::string::npos);
    CHECK(msg.find("batch.size") != std::string::npos);
    CHECK(msg.find("nodes[1].service.rate") != std::string::npos);
  }

  auto dim = read_json(models / "tandem_a2.json");
  dim["batch"]["entry_probs"] = {1.0};
  CHECK_THROWS_AS(load_config(write_json("dim.json", dim)), ConfigError);

  CHECK_THROWS_AS(load_config(models / "absent.json"), MissingFileError);
  CHECK(run({"pmf", s(models / "absent.json"), "--t", "1"}).code == exit_missing_file);

  std::ofstream(scratch() / "garbage.json") << "{ not json";
  CHECK(run({"pmf", s(scratch() / "garbage.json"), "--t", "1"}).code == exit_validation);
}

TEST_CASE("pmf command and self-comparison") {
  auto r = run({"pmf", s(models / "mm_infty.json"), "--t", "1", "--cap", "20"});
  REQUIRE(r.code == exit_ok);
  std::istringstream in(r.out);
  auto table = read_occupancy_csv(in);
  REQUIRE(table.J == 1);
  REQUIRE(table.cells.size() == 21);
  CHECK(table.cells[0] == Occupancy{0});
  CHECK(std::abs(table.prob[0] - 0.531464) <= 1e-6);

  auto prefix = scratch() / "mm";
  REQUIRE(run({"pmf", s(models / "mm_infty.json"), "--t", "1", "--cap", "20", "--out", s(prefix)}).code == exit_ok);
  fs::copy_file(scratch() / "mm.csv", scratch() / "mm_copy.csv", fs::copy_options::overwrite_existing);
  fs::copy_file(scratch() / "mm.json", scratch() / "mm_copy.json", fs::copy_options::overwrite_existing);
  auto c = run({"compare", s(scratch() / "mm.csv"), s(scratch() / "mm_copy.csv")});
  CHECK(c.code == exit_ok);
  auto report = nlohmann::json::parse(c.out);
  CHECK(report["total_variation"] == 0.0);
  CHECK(report["pass"] == true);

  auto meta = read_json(scratch() / "mm.json");
  CHECK(meta["t"] == 1.0);
  CHECK(meta["cap"] == 20);
  CHECK(meta["J"] == 1);
  CHECK(meta.contains("tail_mass"));
  CHECK(meta.contains("quadrature_nodes"));
}

TEST_CASE("other subcommands") {
  auto pgf = run({"pgf", s(models / "mm_infty.json"), "--t", "1", "--z", "0"});
  REQUIRE(pgf.code == exit_ok);
  CHECK(std::abs(nlohmann::json::parse(pgf.out)["value"].get<double>() - 0.5314636053866156) <= 1e-9);

  auto zp = run({"zero-prob", s(models / "mm_infty.json"), "--t", "30"});
  REQUIRE(zp.code == exit_ok);
  CHECK(std::abs(nlohmann::json::parse(zp.out)["value"].get<double>() - std::exp(-1.0)) <= 1e-6);

  auto mo = run({"moments", s(models / "mm_infty.json"), "--t", "1"});
  REQUIRE(mo.code == exit_ok);
  auto mj = nlohmann::json::parse(mo.out);
  CHECK(std::abs(mj["mean"][0].get<double>() - (1 - std::exp(-1.0))) <= 1e-9);

  auto zm = nlohmann::json::parse(run({"moments", s(models / "zeta_batch.json"), "--t", "1"}).out);
  CHECK(zm["mean"].is_null());

  auto bad = run({"pgf", s(models / "mm_infty.json"), "--t", "1", "--z", "0.5,0.5"});
  CHECK(bad.code == exit_validation);
  auto neg = run({"pgf", s(models / "mm_infty.json"), "--t", "-1", "--z", "0.5"});
  CHECK(neg.code == exit_domain);
}

TEST_CASE("ergodicity command") {
  auto z = run({"ergodicity", s(models / "zeta_batch.json")});
  REQUIRE(z.code == exit_ok);
  auto v = nlohmann::json::parse(z.out);
  CHECK(v["verdict"] == "ergodic");
  CHECK(v["criterion"] == "log-moment");

  auto lw = nlohmann::json::parse(run({"ergodicity", s(models / "log_weighted_batch.json")}).out);
  CHECK(lw["verdict"] == "non-ergodic");

  CHECK(run({"ergodicity", s(models / "tandem_a2.json")}).code == exit_domain);
}

TEST_CASE("json artifacts round-trip byte for byte") {
  auto prefix = scratch() / "rt";
  REQUIRE(run({"pmf", s(models / "tandem_a2.json"), "--t", "3", "--cap", "8", "--out", s(prefix)}).code == exit_ok);
  REQUIRE(run({"simulate", s(models / "tandem_a2.json"), "--t", "1,3", "--reps", "2000", "--seed", "5", "--cap",
               "8", "--out", s(scratch() / "rts")})
              .code == exit_ok);
  REQUIRE(run({"ergodicity", s(models / "zeta_batch.json"), "--out", s(scratch() / "rte")}).code == exit_ok);
  for (const char* name : {"rt.json", "rts.json", "rte.json"}) {
    auto text = slurp(scratch() / name);
    REQUIRE_FALSE(text.empty());
    CHECK(dump(nlohmann::json::parse(text)) == text);
  }
  CHECK(fs::exists(scratch() / "rts.t0.csv"));
  CHECK(fs::exists(scratch() / "rts.t1.csv"));
}

TEST_CASE("simulate is deterministic and honours BQNET_SEED") {
  fs::create_directories(scratch() / "w1");
  fs::create_directories(scratch() / "w4");
  auto a = scratch() / "w1" / "d";
  auto b = scratch() / "w4" / "d";
  std::vector<std::string> base = {"simulate", s(models / "tandem_a2.json"), "--t", "3", "--reps", "5000", "--cap",
                                   "10"};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  };
  REQUIRE(run(with({"--seed", "11", "--out", s(a), "--workers", "1"})).code == exit_ok);
  REQUIRE(run(with({"--seed", "11", "--out", s(b), "--workers", "4"})).code == exit_ok);
  CHECK(slurp(scratch() / "w1" / "d.csv") == slurp(scratch() / "w4" / "d.csv"));
  CHECK(slurp(scratch() / "w1" / "d.json") == slurp(scratch() / "w4" / "d.json"));

  ::setenv("BQNET_SEED", "11", 1);
  REQUIRE(run(with({"--out", s(scratch() / "env")})).code == exit_ok);
  ::unsetenv("BQNET_SEED");
  CHECK(slurp(scratch() / "env.csv") == slurp(scratch() / "w1" / "d.csv"));
  REQUIRE(run(with({"--out", s(scratch() / "cfg")})).code == exit_ok);
  CHECK(slurp(scratch() / "cfg.csv") != slurp(scratch() / "w1" / "d.csv"));

  std::istringstream in(slurp(scratch() / "w1" / "d.csv"));
  auto table = read_occupancy_csv(in);
  CHECK(table.replications == 5000u);
  CHECK(table.standard_error.size() == table.prob.size());
}

TEST_CASE("compare detects a wrong service rate") {
  REQUIRE(run({"pmf", s(models / "mm_infty.json"), "--t", "1", "--cap", "20", "--out", s(scratch() / "right")})
              .code == exit_ok);
  auto doc = read_json(models / "mm_infty.json");
  doc["nodes"][0]["service"]["rate"] = 2.0;
  auto wrong = write_json("wrong_mu.json", doc);
  REQUIRE(run({"simulate", s(wrong), "--t", "1", "--reps", "100000", "--seed", "3", "--cap", "20", "--out",
               s(scratch() / "wrong")})
              .code == exit_ok);
  auto r = run({"compare", s(scratch() / "right.csv"), s(scratch() / "wrong.csv")});
  CHECK(r.code == exit_domain);
  auto report = nlohmann::json::parse(r.out);
  CHECK(report["pass"] == false);
  CHECK(report["max_abs_z"].get<double>() > 5.0);

  REQUIRE(run({"simulate", s(models / "mm_infty.json"), "--t", "1", "--reps", "100000", "--seed", "3", "--cap",
               "20", "--out", s(scratch() / "fine")})
              .code == exit_ok);
  auto ok = run({"compare", s(scratch() / "right.csv"), s(scratch() / "fine.csv")});
  CHECK(ok.code == exit_ok);

  REQUIRE(run({"pmf", s(models / "constant_tandem.json"), "--t", "1", "--cap", "5", "--out", s(scratch() / "j2")})
              .code == exit_ok);
  CHECK(run({"compare", s(scratch() / "right.csv"), s(scratch() / "j2.csv")}).code == exit_validation);
  CHECK(run({"compare", s(scratch() / "right.csv"), s(scratch() / "nowhere.csv")}).code == exit_missing_file);
}

TEST_CASE("table helpers") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  OccupancyTable a{1, {{0}, {1}}, {0.5, 0.5}, {}, std::nullopt};
  OccupancyTable b{1, {{0}, {2}}, {0.5, 0.5}, {}, std::nullopt};
  auto rep = compare_outputs(a, b, 0.005);
  CHECK(rep.total_variation == doctest::Approx(0.5));
  CHECK_FALSE(rep.pass);
  CHECK(rep.cells == 3);
  OccupancyTable c{2, {{0, 0}}, {1.0}, {}, std::nullopt};
  CHECK_THROWS_AS(compare_outputs(a, c, 0.005), ValidationError);
}

TEST_CASE("unknown subcommand is a usage error") {
  CHECK(run({"frobnicate"}).code != exit_ok);
  CHECK(run({}).code != exit_ok);
}
