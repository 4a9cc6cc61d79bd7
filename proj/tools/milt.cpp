#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "milt/api.hpp"
#include "milt/bench.hpp"
#include "milt/dataset.hpp"
#include "milt/error.hpp"
#include "milt/miltree.hpp"

namespace fs = std::filesystem;
using namespace milt;

namespace {

// A dataset argument is either a CSV path or the name of a file in data/.
fs::path resolve_dataset(const std::string& arg, const fs::path& data_dir) {
  if (fs::is_regular_file(arg)) return arg;
  const auto candidate = data_dir / (arg + ".csv");
  if (fs::is_regular_file(candidate)) return candidate;
  fail(ErrorKind::NotFound, "no dataset file '" + arg + "' (also looked in " + candidate.string() + ")");
}

void write_text(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot write '" + out + "'");
  f << text;
}

ApiServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"milt: multiple-instance learning workbench"};
  app.require_subcommand(1);
  std::string data_dir = "data";
  app.add_option("--data-dir", data_dir, "Directory searched for named datasets")->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a dataset and print its summary, optionally converting it");
  std::string ingest_path, ingest_out;
  bool musk_uci = false;
  ingest->add_option("file", ingest_path, "CSV or UCI Musk .data file")->required();
  ingest->add_flag("--musk-uci", musk_uci, "Input uses the UCI Musk layout");
  ingest->add_option("--out", ingest_out, "Write the canonical CSV here");

  // tree
  auto* tree_cmd = app.add_subcommand("tree", "Build the bag tree and export it as JSON");
  std::string tree_ds, tree_out, tree_method = "med", newick_out;
  tree_cmd->add_option("dataset", tree_ds)->required();
  tree_cmd->add_option("--method", tree_method)->check(CLI::IsMember({"si", "med"}))->capture_default_str();
  tree_cmd->add_option("--out", tree_out, "Output file (default stdout)");
  tree_cmd->add_option("--newick", newick_out, "Also write the bag tree in Newick format");

  // bench
  auto* bench = app.add_subcommand("bench", "Automated train/update/test run");
  std::string bench_ds, bench_method = "med", svm_variant = "nu", bench_mode = "combined";
  double fraction = 0.3;
  std::vector<std::uint64_t> seeds{1};
  BenchConfig bcfg;
  bool csv = false;
  bench->add_option("dataset", bench_ds)->required();
  bench->add_option("--method", bench_method)->check(CLI::IsMember({"si", "med"}))->capture_default_str();
  bench->add_option("--split", fraction, "Training fraction")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  bench->add_option("--seed", seeds, "One or more seeds")->capture_default_str();
  bench->add_option("--svm", svm_variant)->check(CLI::IsMember({"c", "nu"}))->capture_default_str();
  bench->add_option("--c", bcfg.svm.c)->capture_default_str();
  bench->add_option("--nu", bcfg.svm.nu)->capture_default_str();
  bench->add_option("--rounds", bcfg.rounds, "Automatic update rounds")->capture_default_str();
  bench->add_option("--mode", bench_mode)->check(CLI::IsMember({"combined", "external", "internal"}))->capture_default_str();
  bench->add_flag("--scale", bcfg.svm.scale, "Min-max scale features");
  bench->add_flag("--csv", csv, "CSV output");

  // positions
  auto* positions = app.add_subcommand("positions", "External/internal/combined training-set comparison");
  std::string pos_ds, pos_method = "med";
  std::uint64_t pos_seed = 1;
  BenchConfig pcfg;
  bool pos_csv = false;
  positions->add_option("dataset", pos_ds)->required();
  positions->add_option("--method", pos_method)->check(CLI::IsMember({"si", "med"}))->capture_default_str();
  positions->add_option("--split", pcfg.fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  positions->add_option("--seed", pos_seed)->capture_default_str();
  positions->add_option("--rounds", pcfg.rounds)->capture_default_str();
  positions->add_flag("--csv", pos_csv);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  int port = 8080;
  std::string host = "127.0.0.1";
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto ds = musk_uci ? load_musk_uci(ingest_path) : load_csv(ingest_path);
      const auto counts = ds.class_counts();
      std::cout << "name:       " << ds.name << "\n"
                << "bags:       " << ds.bags.size() << "\n"
                << "instances:  " << ds.num_instances() << "\n"
                << "dimension:  " << ds.dimension << "\n";
      for (std::size_t c = 0; c < counts.size(); ++c) {
        std::cout << "class " << c << " (" << ds.class_names[c] << "): " << counts[c] << " bags\n";
      }
      if (!ingest_out.empty()) save_csv(ds, ingest_out);
    } else if (*tree_cmd) {
      auto ds = std::make_shared<const MilDataset>(load_csv(resolve_dataset(tree_ds, data_dir)));
      const auto t = build_miltree(ds, parse_selection_method(tree_method));
      write_text(bag_tree_json(*t, t->initial_slots(), t->classify_positions()).dump(1) + "\n", tree_out);
      if (!newick_out.empty()) {
        write_text(tree_to_newick(t->bag_tree(), [&](std::size_t i) { return ds->bags[i].id; }) + "\n", newick_out);
      }
    } else if (*bench) {
      auto ds = std::make_shared<const MilDataset>(load_csv(resolve_dataset(bench_ds, data_dir)));
      const auto t = build_miltree(ds, parse_selection_method(bench_method));
      bcfg.fraction = fraction;
      bcfg.mode = parse_training_mode(bench_mode);
      bcfg.svm.variant = parse_svm_variant(svm_variant);
      std::vector<EvalResult> results;
      double sum = 0.0;
      for (const auto seed : seeds) {
        bcfg.seed = seed;
        results.push_back(run_benchmark(t, bcfg));
        sum += results.back().metrics.accuracy;
      }
      if (csv) {
        std::cout << results_csv(results);
      } else {
        std::cout << format_results(results);
        if (results.size() > 1) std::cout << "mean accuracy: " << sum / static_cast<double>(results.size()) << "\n";
      }
    } else if (*positions) {
      auto ds = std::make_shared<const MilDataset>(load_csv(resolve_dataset(pos_ds, data_dir)));
      const auto t = build_miltree(ds, parse_selection_method(pos_method));
      pcfg.seed = pos_seed;
      const auto r = positioning_experiment(t, pcfg);
      std::cout << (pos_csv ? positioning_csv(r) : format_positioning(r));
    } else if (*serve) {
      ApiServer server(data_dir);
      server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "milt serving " << data_dir << " on http://" << host << ":" << server.port() << "\n";
      server.run();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "milt: " << e.what() << "\n";
    return e.kind() == ErrorKind::NotFound ? 3 : 2;
  }
  return 0;
}
