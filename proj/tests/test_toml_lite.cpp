#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "npupg/toml_lite.hpp"

using namespace npupg;

TEST_CASE("scalar values and comments") {
  auto t = toml::parse(
      "a = 3\n"
      "b = 2.5  # trailing comment\n"
      "c = \"hi # not a comment\"\n"
      "d = true\n"
      "e = -7\n"
      "hex = 0x1f\n"
      "bits = 0b1011\n",
      "test");
  CHECK(t.get_int("a") == 3);
  CHECK(t.get_double("b") == doctest::Approx(2.5));
  CHECK(t.get_string("c") == "hi # not a comment");
  CHECK(t.get_bool("d", false));
  CHECK(t.get_int("e") == -7);
  CHECK(t.get_int("hex") == 31);
  CHECK(t.get_int("bits") == 11);
}

TEST_CASE("sections and dotted keys") {
  auto t = toml::parse(
      "[chip]\n"
      "name = \"x\"\n"
      "[power.leakage]\n"
      "ratio = 0.5\n"
      "[power]\n"
      "static_w = 4\n",
      "test");
  REQUIRE(t.subtable("chip") != nullptr);
  CHECK(t.subtable("chip")->get_string("name") == "x");
  REQUIRE(t.subtable("power") != nullptr);
  CHECK(t.subtable("power")->get_double("static_w") == doctest::Approx(4));
  REQUIRE(t.subtable("power")->subtable("leakage") != nullptr);
  CHECK(t.subtable("power")->subtable("leakage")->get_double("ratio") == doctest::Approx(0.5));
}

TEST_CASE("arrays") {
  auto t = toml::parse("xs = [1, 2.5, 3]\nnames = [\"a\", \"b\"]\n", "test");
  auto xs = t.get_double_array("xs");
  REQUIRE(xs.size() == 3);
  CHECK(xs[1] == doctest::Approx(2.5));
  auto names = t.get_string_array("names");
  REQUIRE(names.size() == 2);
  CHECK(names[1] == "b");
}

TEST_CASE("array of tables") {
  auto t = toml::parse(
      "[workload]\n"
      "family = \"synthetic\"\n"
      "[[workload.ops]]\n"
      "kind = \"matmul\"\n"
      "m = 64\n"
      "[[workload.ops]]\n"
      "kind = \"elementwise\"\n"
      "elems = 100\n",
      "test");
  const auto* wl = t.subtable("workload");
  REQUIRE(wl != nullptr);
  auto it = wl->table_arrays.find("ops");
  REQUIRE(it != wl->table_arrays.end());
  REQUIRE(it->second.size() == 2);
  CHECK(it->second[0].get_string("kind") == "matmul");
  CHECK(it->second[1].get_int("elems") == 100);
}

TEST_CASE("defaults and missing keys") {
  auto t = toml::parse("a = 1\n", "test");
  CHECK(t.get_int("zz", 9) == 9);
  CHECK_THROWS_AS(t.get_int("zz"), ConfigError);
  CHECK_THROWS_AS(t.get_string("a"), ConfigError);
}

TEST_CASE("parse errors carry location") {
  CHECK_THROWS_WITH_AS(toml::parse("a == 3\n", "f.toml"), doctest::Contains("f.toml:1"),
                       ConfigError);
  CHECK_THROWS_AS(toml::parse("a = 1\na = 2\n", "f"), ConfigError);
  CHECK_THROWS_AS(toml::parse("a = 12q\n", "f"), ConfigError);
  CHECK_THROWS_AS(toml::parse("[sec\n", "f"), ConfigError);
  CHECK_THROWS_AS(toml::parse_file("/nonexistent/x.toml"), ConfigError);
}
