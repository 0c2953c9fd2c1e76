// phtx: regenerate the toy tables, build entropy phase portraits, and run
// shortest-path queries on graph files.
//
//   phtx table <1|2|3> [--out DIR] [--decoder peaked|tilt] [--steps N] [--dt H] [--damping L]
//   phtx phase [--input FILE] [--out DIR] [--window W] [--bins B] [--samples N] [--seed S]
//   phtx plan <graph> <src> <dst>
//
// Any flag may also come from a key=value file given with --config; flags on
// the command line win.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "phtx/phtx.hpp"

namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string out_dir = ".";
  std::string decoder = "peaked";
  std::size_t steps = 1000;
  double dt = 0.1;
  double damping = 0.05;
  std::size_t window = 1;
  std::size_t bins = 8;
  std::size_t samples = 20000;
  std::uint64_t seed = 1;
  std::string input;
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw phtx::Error("cannot write '" + path.string() + "'");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) throw phtx::Error("write failed for '" + path.string() + "'");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw phtx::Error("cannot create output directory '" + dir + "': " + ec.message());
}

int cmd_table(int n, const RunConfig& cfg) {
  namespace ex = phtx::experiments;
  ex::Table t;
  if (n == 1) t = ex::table1(ex::decoder_by_name(cfg.decoder));
  else if (n == 2) t = ex::table2(ex::decoder_by_name(cfg.decoder));
  else t = ex::table3({cfg.steps, cfg.dt, cfg.damping});
  ensure_dir(cfg.out_dir);
  const std::string stem = "table" + std::to_string(n);
  const std::string md = t.markdown();
  write_text(fs::path(cfg.out_dir) / (stem + ".csv"), t.csv());
  write_text(fs::path(cfg.out_dir) / (stem + ".md"), md);
  std::cout << md;
  return 0;
}

int cmd_phase(const RunConfig& cfg) {
  namespace info = phtx::info;
  std::vector<info::PhasePortrait> portraits;
  if (cfg.input.empty()) {
    const double uc = 0.5;
    portraits = info::sample_field_portraits([uc](const info::PhaseSample& x) { return info::rotation_field(x, uc); },
                                             cfg.samples, 0.0, 1.0, -0.5, 0.5, 0.01, cfg.seed);
  } else {
    auto in = phtx::open_input(cfg.input);
    std::vector<std::vector<double>> dists;
    try {
      dists = info::read_distributions(in);
    } catch (const phtx::ParseError& e) {
      throw phtx::Error(cfg.input + ": " + e.what());
    }
    portraits.push_back(info::portrait(dists, cfg.window));
  }
  const auto field = info::empirical_field(portraits, cfg.bins, cfg.bins);

  ensure_dir(cfg.out_dir);
  {
    auto out = open_output(fs::path(cfg.out_dir) / "portrait.csv");
    info::write_portraits_csv(out, portraits);
  }
  {
    auto out = open_output(fs::path(cfg.out_dir) / "field.csv");
    info::write_field_csv(out, field);
  }
  try {
    const double score = info::divergence_score(field);
    std::cout << "divergence_score=" << phtx::format_real(score) << '\n';
  } catch (const phtx::Error& e) {
    std::cout << "divergence_score=undefined (" << e.what() << ")\n";
  }
  return 0;
}

int cmd_plan(const std::string& file, const std::string& src, const std::string& dst) {
  namespace pl = phtx::planner;
  auto in = phtx::open_input(file);
  pl::LabeledGraph g;
  try {
    g = pl::read_graph(in);
  } catch (const phtx::ParseError& e) {
    throw phtx::Error(file + ": " + e.what());
  }
  const auto a = pl::find_node(g, src), b = pl::find_node(g, dst);
  if (!a) throw phtx::Error("unknown source node '" + src + "'");
  if (!b) throw phtx::Error("unknown destination node '" + dst + "'");
  const auto path = pl::shortest_path(g, *a, *b);
  if (!path) {
    std::cout << "unreachable\n";
    return 0;
  }
  for (std::size_t k = 0; k < path->nodes.size(); ++k) std::cout << (k ? " " : "") << g.payload(path->nodes[k]);
  std::cout << "  cost=" << phtx::format_real(path->cost) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Toy tables, phase portraits and graph planning"};
  app.set_config("--config", "", "key=value file with default flag values");
  app.require_subcommand(1);

  RunConfig cfg;
  app.add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  app.add_option("--decoder", cfg.decoder, "toy decoder for tables 1 and 2")
      ->check(CLI::IsMember({"peaked", "tilt"}))
      ->capture_default_str();
  app.add_option("--steps", cfg.steps, "oscillator step count")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--dt", cfg.dt, "oscillator step size")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--damping", cfg.damping, "damping coefficient")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--window", cfg.window, "entropy-drop smoothing window")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--bins", cfg.bins, "grid bins per axis")->check(CLI::Range(3, 1000))->capture_default_str();
  app.add_option("--samples", cfg.samples, "synthetic portrait count")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--seed", cfg.seed, "seed for synthetic portraits")->capture_default_str();
  app.add_option("--input", cfg.input, "distribution sequence, one distribution per line");

  int table_no = 0;
  auto* table = app.add_subcommand("table", "run a toy experiment and emit its table")->fallthrough();
  table->add_option("n", table_no, "table number")->required()->check(CLI::IsMember({1, 2, 3}));

  auto* phase = app.add_subcommand("phase", "phase portrait and empirical field")->fallthrough();

  std::string graph_file, src, dst;
  auto* plan = app.add_subcommand("plan", "shortest path on a graph file")->fallthrough();
  plan->add_option("graph", graph_file, "graph file")->required();
  plan->add_option("src", src, "source label or index")->required();
  plan->add_option("dst", dst, "destination label or index")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*table) return cmd_table(table_no, cfg);
    if (*phase) return cmd_phase(cfg);
    if (*plan) return cmd_plan(graph_file, src, dst);
  } catch (const std::exception& e) {
    std::cerr << "phtx: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
