#include "runner.hpp"

#include <doctest.h>

using namespace solvrigid::cli;
using nlohmann::json;

namespace {

// small configs so the suite stays quick
json quick(const std::string& sub) {
  if (sub == "metric") return json{{"triples", 500}, {"chain", {{"resolution", 64}, {"max_depth", 4}}}};
  if (sub == "geodesic") return json{{"pairs", 500}};
  if (sub == "classify") return json{{"pairs", 60}, {"composites", 50}};
  if (sub == "conformal") return json{{"triples", 100}, {"equivariance_sets", 5}, {"grid", 2}};
  if (sub == "conjugate")
    return json{{"grid", {{"resolution", 1e-2}}}, {"word_len", 6}, {"probes", 60},
                {"radial", {{"steps", 4}}}};
  if (sub == "roots") return json{{"pairs", 500}, {"random_elements", 5}};
  return json();
}

std::string pointer_of(const std::string& sub, const json& cfg) {
  try {
    run(sub, cfg, 1);
  } catch (const ConfigError& e) {
    return e.pointer;
  }
  return "";
}

}  // namespace

TEST_CASE("every subcommand passes on quick configs") {
  for (const auto& sub : subcommands()) {
    CAPTURE(sub);
    const Report r = run(sub, quick(sub), 5);
    for (const auto& c : r.checks) {
      CAPTURE(c.name);
      CHECK(c.pass);
    }
    CHECK(r.pass());
    CHECK_FALSE(r.checks.empty());
  }
}

TEST_CASE("reports are deterministic and named by content") {
  const Report a = run("roots", quick("roots"), 9), b = run("roots", quick("roots"), 9);
  const std::string ta = render(a), tb = render(b);
  CHECK(ta == tb);
  CHECK(report_name(a, ta) == report_name(b, tb));
  CHECK(report_name(a, ta).rfind("report-roots-", 0) == 0);
  const Report c = run("metric", quick("metric"), 1), d = run("metric", quick("metric"), 2);
  CHECK(render(c) != render(d));
}

TEST_CASE("report schema round trip") {
  const Report r = run("geodesic", quick("geodesic"), 3);
  const json j = json::parse(render(r));
  CHECK(json::parse(j.dump(2)) == j);
  CHECK(j["subcommand"] == "geodesic");
  CHECK(j["seed"] == 3);
  CHECK(j["pass"] == true);
  CHECK(j["config"]["pairs"] == 500);
  CHECK(j["config"].contains("heights"));  // defaults are recorded
  for (const auto& c : j["checks"]) {
    CHECK(c.contains("name"));
    CHECK(c.contains("pass"));
  }
  REQUIRE(j["artifacts"].size() == 1);
  CHECK(j["artifacts"][0]["fnv1a64"] == fnv1a64_hex(r.artifacts[0].second));
}

TEST_CASE("config errors carry a json pointer") {
  CHECK(pointer_of("metric", json{{"triples", "many"}}) == "/triples");
  CHECK(pointer_of("metric", json{{"chain", {{"max_depth", 99}}}}) == "/chain/max_depth");
  CHECK(pointer_of("metric", json{{"specs", {{{"alphas", {2, 1}}, {"mults", {1, 1}}}}}}) == "/specs/0");
  CHECK(pointer_of("metric", json{{"bogus", 1}}) == "/bogus");
  CHECK(pointer_of("conjugate", json{{"stretch", {{"nodes", 1}}}}) == "/stretch/nodes");
  CHECK(pointer_of("geodesic", json::array()) == "/");
  CHECK(pointer_of("classify", json{{"box", -1}}) == "/box");
  CHECK_THROWS_AS(run("nope", json(), 1), ConfigError);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
}
