//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "uss/harness.hpp"
#include "uss/merge.hpp"
#include "uss/rng.hpp"
#include "uss/serialization.hpp"
#include "uss/sketch.hpp"
#include "uss/streams.hpp"

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  fs::create_directories(dir);
  return dir;
}

struct CommonOptions {
  std::string config_path;
  std::string out = ".";
  std::string format = "csv";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool seed_set = false;
  bool threads_set = false;
};

uss::ExperimentConfig load_config(const CommonOptions& opts) {
  uss::ExperimentConfig cfg = uss::parse_experiment_config(read_file(opts.config_path));
  if (opts.seed_set) cfg.seed = opts.seed;
  if (opts.threads_set) cfg.threads = std::max(1u, opts.threads);
  return cfg;
}

int cmd_generate(const CommonOptions& opts) {
  const uss::ExperimentConfig cfg = load_config(opts);
  const uss::StreamSpec spec = uss::stream_spec_from_config(
      cfg, uss::derive_seed(cfg.seed, uss::kStreamSeedTag));
  const fs::path dir = prepare_out_dir(opts.out);

  std::ofstream rows(dir / "stream.txt", std::ios::binary);
  if (!rows) throw std::runtime_error("cannot write " + (dir / "stream.txt").string());
  rows << "item\n";
  const uss::GroundTruth truth = uss::emit(spec, [&rows](uss::ItemId id) {
    rows << id << '\n';
  });
  if (!rows) throw std::runtime_error("write failed for " + (dir / "stream.txt").string());
  rows.close();

  std::string truth_csv = "item_id,count\n";
  for (std::size_t i = 0; i < truth.universe(); ++i) {
    truth_csv += std::to_string(i + 1);
    truth_csv += ',';
    truth_csv += std::to_string(truth.counts[i]);
    truth_csv += '\n';
  }
  write_file(dir / "truth.csv", truth_csv);

  std::cout << "wrote " << truth.total << " rows over " << truth.universe()
            << " items to " << (dir / "stream.txt").string() << "\n";
  return 0;
}

int cmd_run(const CommonOptions& opts) {
  const uss::ExperimentConfig cfg = load_config(opts);
  const uss::EvalReport report = uss::run_experiment(cfg);
  const fs::path dir = prepare_out_dir(opts.out);
  const bool json = opts.format == "json";
  const fs::path path = dir / (json ? "report.json" : "report.csv");
  uss::write_report(report, json ? uss::ReportFormat::json : uss::ReportFormat::csv,
                    path.string());
  std::cout << "wrote " << report.rows.size() << " result rows ("
            << report.estimators.size() << " estimators) to " << path.string()
            << "\n";
  for (const auto& [name, rows] : report.inclusion)
    std::cout << "wrote " << rows.size() << " inclusion rows for " << name << "\n";
  return 0;
}

uss::SketchSnapshot snapshot_any(const uss::AnySketch& any) {
  if (const auto* s = std::get_if<uss::Sketch>(&any)) return uss::snapshot(*s);
  return uss::snapshot(std::get<uss::WeightedSketch>(any));
}

int cmd_merge_demo(const std::string& a_path, const std::string& b_path,
                   std::size_t capacity, const std::string& kind,
                   const CommonOptions& opts) {
  const uss::SketchSnapshot a = snapshot_any(uss::deserialize_sketch(read_file(a_path)));
  const uss::SketchSnapshot b = snapshot_any(uss::deserialize_sketch(read_file(b_path)));
  const uss::MergeKind merge_kind =
      kind == "mg" ? uss::MergeKind::misra_gries : uss::MergeKind::unbiased;
  const uss::MergeResult result =
      uss::merge(a, b, capacity, merge_kind, opts.seed_set ? opts.seed : 0);
  const fs::path dir = prepare_out_dir(opts.out);
  const fs::path path = dir / "merged.json";
  write_file(path, uss::serialize_sketch(result.sketch) + "\n");
  std::cout << "merged " << a.entries.size() << " + " << b.entries.size()
            << " bins into " << result.sketch.size() << " (capacity " << capacity
            << ") at " << path.string() << "\n";
  return 0;
}

int cmd_ingest(const std::string& input, const std::string& keys,
               const std::string& weight_column, std::size_t capacity,
               const std::string& mode, const CommonOptions& opts) {
  std::vector<std::string> key_columns;
  std::string cur;
  for (char c : keys) {
    if (c == ',') {
      key_columns.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  key_columns.push_back(cur);

  const uss::UpdateMode update_mode = mode == "deterministic"
                                          ? uss::UpdateMode::deterministic
                                          : uss::UpdateMode::unbiased;
  const std::uint64_t seed = opts.seed_set ? opts.seed : 0;
  uss::StringInterner interner;
  const bool weighted = !weight_column.empty();

  std::string items_csv = "key,estimate\n";
  std::uint64_t rows = 0;
  const fs::path dir = prepare_out_dir(opts.out);
  const auto finish = [&](const auto& sketch) {
    for (const auto& bin : sketch.bins()) {
      std::ostringstream line;
      line << bin.count;
      std::string key = interner.name(bin.item);
      // Escape CSV specials in raw keys.
      if (key.find_first_of(",\"\n") != std::string::npos) {
        std::string quoted = "\"";
        for (char c : key) {
          if (c == '"') quoted += '"';
          quoted += c;
        }
        quoted += '"';
        key = quoted;
      }
      items_csv += key;
      items_csv += ',';
      items_csv += line.str();
      items_csv += '\n';
    }
    write_file(dir / "items.csv", items_csv);
    write_file(dir / "sketch.json", uss::serialize_sketch(sketch) + "\n");
  };

  if (weighted) {
    uss::WeightedSketch sketch(capacity, update_mode, seed);
    rows = uss::ingest_csv(input, key_columns, weight_column, interner,
                           [&](uss::ItemId id, double w) {
                             sketch.update_weighted(id, w);
                           });
    finish(sketch);
  } else {
    uss::Sketch sketch(capacity, update_mode, seed);
    rows = uss::ingest_csv(input, key_columns, weight_column, interner,
                           [&](uss::ItemId id, double) { sketch.update(id); });
    finish(sketch);
  }
  std::cout << "ingested " << rows << " rows, " << interner.size()
            << " distinct keys; wrote " << (dir / "items.csv").string() << " and "
            << (dir / "sketch.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space Saving sketch experiment tool"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string merge_a, merge_b, merge_kind = "unbiased";
  std::string ingest_input, ingest_keys, ingest_weight, ingest_mode = "unbiased";
  std::size_t merge_capacity = 0, ingest_capacity = 100;

  const auto add_common = [&](CLI::App* cmd, bool with_config) {
    if (with_config)
      cmd->add_option("--config", opts.config_path, "Experiment config JSON")
          ->required()
          ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out, "Output directory");
    cmd->add_option("--seed", opts.seed, "Override the config seed")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    return cmd;
  };

  CLI::App* generate = add_common(
      app.add_subcommand("generate", "Dump a synthetic stream and its truth"), true);
  (void)generate;

  CLI::App* run =
      add_common(app.add_subcommand("run", "Execute an experiment config"), true);
  run->add_option("--format", opts.format, "Report format")
      ->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--threads", opts.threads, "Worker thread count")
      ->each([&opts](const std::string&) { opts.threads_set = true; });

  CLI::App* merge_demo = add_common(
      app.add_subcommand("merge-demo", "Merge two serialized sketches"), false);
  merge_demo->add_option("--a", merge_a, "First sketch JSON")
      ->required()
      ->check(CLI::ExistingFile);
  merge_demo->add_option("--b", merge_b, "Second sketch JSON")
      ->required()
      ->check(CLI::ExistingFile);
  merge_demo->add_option("--m", merge_capacity, "Merged capacity")->required();
  merge_demo->add_option("--kind", merge_kind, "Merge kind")
      ->check(CLI::IsMember({"unbiased", "mg"}));

  CLI::App* ingest = add_common(
      app.add_subcommand("ingest", "Sketch an event-log CSV"), false);
  ingest->add_option("--input", ingest_input, "CSV file")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--keys", ingest_keys, "Comma-separated key columns")->required();
  ingest->add_option("--weight", ingest_weight, "Weight column (default: unit rows)");
  ingest->add_option("--capacity", ingest_capacity, "Sketch capacity");
  ingest->add_option("--mode", ingest_mode, "Update mode")
      ->check(CLI::IsMember({"unbiased", "deterministic"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("generate")) return cmd_generate(opts);
    if (app.got_subcommand("run")) return cmd_run(opts);
    if (app.got_subcommand("merge-demo"))
      return cmd_merge_demo(merge_a, merge_b, merge_capacity, merge_kind, opts);
    if (app.got_subcommand("ingest"))
      return cmd_ingest(ingest_input, ingest_keys, ingest_weight, ingest_capacity,
                        ingest_mode, opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
