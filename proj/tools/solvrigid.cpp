#include "runner.hpp"

#include "solvrigid/errors.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using solvrigid::cli::ConfigError;
using solvrigid::cli::Report;

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json();
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::string write_report(const Report& r, const fs::path& out, bool verbose) {
  const std::string text = solvrigid::cli::render(r);
  const std::string name = solvrigid::cli::report_name(r, text);
  write_file(out / name, text);
  for (const auto& [file, body] : r.artifacts) write_file(out / file, body);
  for (const auto& c : r.checks) {
    if (verbose || !c.pass) std::cerr << (c.pass ? "ok   " : "FAIL ") << r.subcommand << ' ' << c.name << " value=" << c.value << " limit=" << c.limit << '\n';
  }
  std::cout << (r.pass() ? "PASS " : "FAIL ") << r.subcommand << ' ' << (out / name).string() << '\n';
  return name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"solvrigid: numerical checks for quasi-isometric rigidity of solvable groups"};
  std::string sub, config_path, out_dir = ".";
  std::uint64_t seed = 1;
  bool verbose = false;
  std::vector<std::string> choices = solvrigid::cli::subcommands();
  choices.push_back("all");
  app.add_option("subcommand", sub, "metric | geodesic | classify | conformal | conjugate | roots | all")
      ->required()
      ->check(CLI::IsMember(choices));
  app.add_option("--config", config_path, "JSON config; for 'all', one object per subcommand");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--out", out_dir, "output directory for reports and CSV artifacts");
  app.add_flag("--verbose", verbose, "print every check");
  CLI11_PARSE(app, argc, argv);

  try {
    const json config = load_config(config_path);
    fs::create_directories(out_dir);
    std::vector<std::string> run_list;
    if (sub == "all") {
      if (!config.is_null() && !config.is_object()) throw ConfigError("/", "expected an object");
      for (const auto& [k, v] : config.items()) {
        if (std::find(choices.begin(), choices.end() - 1, k) == choices.end() - 1)
          throw ConfigError("/" + k, "unknown subcommand");
      }
      run_list = solvrigid::cli::subcommands();
    } else {
      run_list = {sub};
    }
    bool ok = true;
    json index = json::array();
    for (const auto& s : run_list) {
      json c;
      if (sub != "all") {
        c = config;
      } else if (config.is_object() && config.contains(s)) {
        c = config.at(s);
      }
      Report r;
      try {
        r = solvrigid::cli::run(s, c, seed);
      } catch (const ConfigError& e) {
        throw ConfigError(sub == "all" ? "/" + s + e.pointer : e.pointer,
                          std::string(e.what()).substr(e.pointer.size() + 2));
      }
      const std::string name = write_report(r, out_dir, verbose);
      index.push_back({{"subcommand", s}, {"report", name}, {"pass", r.pass()}});
      ok = ok && r.pass();
    }
    if (sub == "all") write_file(fs::path(out_dir) / "index.json", index.dump(2) + "\n");
    return ok ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << (e.pointer.empty() ? "/" : e.pointer) << ": "
              << std::string(e.what()).substr(e.pointer.size() + 2) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
