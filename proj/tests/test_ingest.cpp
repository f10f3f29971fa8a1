#include <doctest.h>

#include <filesystem>

#include "grove/error.hpp"
#include "grove/ingest.hpp"

using namespace grove;

namespace {

const char* kCanonical = R"({
  "format": "cgprof-1", "run": "r1", "ranks": 2, "units": "ms",
  "params": {"size": 64, "mode": "fast", "threads": "8"},
  "root": {"name": "main", "module": "app", "inclusive": [100, 120], "exclusive": [10, 20],
    "children": [
      {"name": "solve", "module": "lib", "file": "s.c", "line": 12, "inclusive": [90, 100], "exclusive": [90, 100]}
    ]}
})";

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::io_error;
}

}  // namespace

TEST_CASE("canonical profile parses with unit conversion") {
  const Profile p = parse_profile(kCanonical);
  CHECK(p.run_name == "r1");
  CHECK(p.rank_count == 2);
  REQUIRE(p.nodes.size() == 2);
  CHECK(p.nodes[0].metrics[1].inclusive == doctest::Approx(0.12));
  CHECK(p.nodes[1].frame.file == "s.c");
  CHECK(p.nodes[1].frame.line == 12u);
  CHECK(std::get<double>(p.params.at("size")) == 64.0);
  CHECK(std::get<double>(p.params.at("threads")) == 8.0);
  CHECK(std::get<std::string>(p.params.at("mode")) == "fast");
}

TEST_CASE("canonical round trip is stable") {
  const Profile p = parse_profile(kCanonical);
  const std::string text = serialize_profile(p);
  const Profile q = parse_profile(text);
  CHECK(p == q);
  CHECK(serialize_profile(q) == text);
}

TEST_CASE("scalar metrics broadcast and missing modules default") {
  const Profile p = parse_profile(
      R"({"format":"cgprof-1","run":"x","ranks":3,"root":{"name":"main","inclusive":2,"exclusive":1}})");
  REQUIRE(p.nodes[0].metrics.size() == 3);
  CHECK(p.nodes[0].metrics[2].inclusive == 2.0);
  CHECK(p.nodes[0].frame.module == "unknown");
}

TEST_CASE("malformed text reports line and column") {
  try {
    parse_profile("{\n  \"format\": \"cgprof-1\",\n  \"run\": ,\n}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.code() == Errc::parse_error);
    CHECK(e.line() == 3);
    CHECK(e.column() > 0);
  }
}

TEST_CASE("schema violations") {
  CHECK(code_of([] { parse_profile(R"({"format":"cgprof-2","run":"x","ranks":1,"root":{"name":"m","inclusive":1,"exclusive":1}})"); }) ==
        Errc::schema_violation);
  CHECK(code_of([] { parse_profile(R"({"format":"cgprof-1","run":"x","ranks":1,"bogus":1,"root":{"name":"m","inclusive":1,"exclusive":1}})"); }) ==
        Errc::schema_violation);
  CHECK(code_of([] { parse_profile(R"({"format":"cgprof-1","run":"x","ranks":1,"root":{"name":"m","inclusive":1,"exclusive":2}})"); }) ==
        Errc::schema_violation);
  CHECK(code_of([] { parse_profile(R"({"format":"cgprof-1","run":"x","ranks":1,"root":{"name":"m","inclusive":-1,"exclusive":0}})"); }) ==
        Errc::schema_violation);
  CHECK(code_of([] { parse_profile(R"({"format":"cgprof-1","run":"x","run":"y","ranks":1,"root":{"name":"m","inclusive":1,"exclusive":1}})"); }) ==
        Errc::schema_violation);
  CHECK(code_of([] {
          parse_profile(R"({"format":"cgprof-1","run":"x","ranks":1,"root":{"name":"m","inclusive":2,"exclusive":0,
            "children":[{"name":"a","module":"l","inclusive":1,"exclusive":1},{"name":"a","module":"l","inclusive":1,"exclusive":1}]}})");
        }) == Errc::schema_violation);
  CHECK(code_of([] { parse_profile(R"({"format":"cgprof-1","run":"x","ranks":2,"root":{"name":"m","inclusive":[1],"exclusive":[1,1]}})"); }) ==
        Errc::schema_violation);
}

TEST_CASE("flat profiles build a tree with implicit intermediates") {
  const Profile p = parse_flat_profile(
      "# run: flat-1\n"
      "# ranks: 2\n"
      "# param: size=32\n"
      "main | app | incl=10,12 | excl=1,2\n"
      "main/a/b | lib | incl=4 | excl=4\n"
      "main/c | lib | incl=5,6 | excl=5,6\n");
  CHECK(p.run_name == "flat-1");
  CHECK(p.rank_count == 2);
  REQUIRE(p.nodes.size() == 4);
  CHECK(p.nodes[1].frame.name == "a");
  CHECK(p.nodes[1].frame.module == "unknown");
  CHECK(p.nodes[1].metrics[0].exclusive == 0.0);
  CHECK(p.nodes[1].metrics[1].inclusive == 4.0);
  CHECK(p.nodes[2].frame.name == "b");
  CHECK(p.nodes[3].frame.name == "c");
  CHECK(std::get<double>(p.params.at("size")) == 32.0);
}

TEST_CASE("flat profile errors") {
  CHECK(code_of([] { parse_flat_profile(""); }) == Errc::parse_error);
  CHECK(code_of([] { parse_flat_profile("main | app | incl=1 | excl=1\nmain | app | incl=1 | excl=1\n"); }) ==
        Errc::duplicate_context);
  CHECK(code_of([] { parse_flat_profile("main | app | incl=1 | excl=1\nother | app | incl=1 | excl=1\n"); }) ==
        Errc::parse_error);
  CHECK(code_of([] { parse_flat_profile("main | app | incl=x | excl=1\n"); }) == Errc::parse_error);
}

TEST_CASE("flat rank selectors fill individual ranks") {
  const Profile p = parse_flat_profile(
      "# ranks: 4\n"
      "main | app | incl=9 | excl=9 | ranks=0-1\n"
      "main | app | incl=7 | excl=7 | ranks=2,3\n");
  REQUIRE(p.nodes.size() == 1);
  CHECK(p.nodes[0].metrics[1].inclusive == 9.0);
  CHECK(p.nodes[0].metrics[3].inclusive == 7.0);
}

TEST_CASE("files are loaded by content and errors name the file") {
  const auto dir = std::filesystem::temp_directory_path() / "grove_ingest_test";
  std::filesystem::create_directories(dir);
  write_text_file(dir / "a.json", kCanonical);
  write_text_file(dir / "b.txt", "main | app | incl=1 | excl=1\n");
  write_text_file(dir / "bad.json", "{ nope");
  CHECK(load_profile_file(dir / "a.json").run_name == "r1");
  CHECK(load_profile_file(dir / "b.txt").nodes.size() == 1);
  try {
    load_profile_file(dir / "bad.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("bad.json") != std::string::npos);
  }
  CHECK_THROWS_AS(load_profile_file(dir / "missing.json"), Error);
  std::filesystem::remove_all(dir);
}
