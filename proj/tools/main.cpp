// Command-line driver for the tq prover. Talks to the core only through
// the public C API.
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tq/tq.h"

namespace {

struct Common {
  tq_options opts;
  bool json = false;
};

int do_run(const std::string& path, const Common& c) {
  tq_report* rep = nullptr;
  tq_status st = tq_run(path.c_str(), &c.opts, &rep);
  if (!rep) {
    std::fprintf(stderr, "error: %s\n", tq_last_error());
    return 2;
  }
  std::printf("%s\n", c.json ? tq_report_json(rep) : tq_report_text(rep));
  int code = tq_report_exit_code(rep);
  tq_report_free(rep);
  (void)st;
  return code;
}

int do_oracle(const std::string& path, const std::string& replay_file, const Common& c) {
  tq_report* rep = nullptr;
  if (replay_file.empty())
    tq_oracle(path.c_str(), &c.opts, &rep);
  else
    tq_replay(path.c_str(), replay_file.c_str(), &c.opts, &rep);
  if (!rep) {
    std::fprintf(stderr, "error: %s\n", tq_last_error());
    return 2;
  }
  std::printf("%s\n", c.json ? tq_report_json(rep) : tq_report_text(rep));
  int code = tq_report_exit_code(rep);
  tq_report_free(rep);
  return code;
}

struct BenchRow {
  std::string file;
  std::string verdict;
  double total_ms = 0;
  int code = 2;
};

int do_bench(const std::string& dir, int parallel, const Common& c) {
  std::vector<std::string> files;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    if (e.path().extension() == ".tq") files.push_back(e.path().string());
  }
  if (ec) {
    std::fprintf(stderr, "error: cannot list %s\n", dir.c_str());
    return 2;
  }
  std::sort(files.begin(), files.end());
  std::vector<BenchRow> rows(files.size());

  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= files.size()) return;
      tq_report* rep = nullptr;
      tq_run(files[i].c_str(), &c.opts, &rep);
      BenchRow row;
      row.file = std::filesystem::path(files[i]).filename().string();
      if (rep) {
        switch (tq_report_verdict(rep)) {
          case TQ_PROVEN_EQUIVALENT:
            row.verdict = "Proven-Equivalent";
            break;
          case TQ_UNKNOWN:
            switch (tq_report_reason(rep)) {
              case TQ_REASON_TYPE_FAILURE: row.verdict = "Unknown(TypeFailure)"; break;
              case TQ_REASON_INCONSISTENT_CONSTRAINTS:
                row.verdict = "Unknown(InconsistentConstraints)";
                break;
              case TQ_REASON_OUT_OF_FRAGMENT: row.verdict = "Unknown(OutOfFragment)"; break;
              default: row.verdict = "Unknown"; break;
            }
            break;
          default:
            row.verdict = "ERROR";
            break;
        }
        row.total_ms = tq_report_phase_ms(rep, "total");
        row.code = tq_report_exit_code(rep);
        tq_report_free(rep);
      } else {
        row.verdict = "ERROR";
      }
      rows[i] = std::move(row);
    }
  };
  int n = std::max(1, parallel);
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (c.json) {
    std::printf("[\n");
    for (size_t i = 0; i < rows.size(); ++i) {
      std::printf("  {\"file\": \"%s\", \"verdict\": \"%s\", \"total_ms\": %.3f}%s\n",
                  rows[i].file.c_str(), rows[i].verdict.c_str(), rows[i].total_ms,
                  i + 1 < rows.size() ? "," : "");
    }
    std::printf("]\n");
  } else {
    size_t w = 4;
    for (const BenchRow& r : rows) w = std::max(w, r.file.size());
    std::printf("%-*s  %-34s  %10s\n", static_cast<int>(w), "file", "verdict", "time");
    for (const BenchRow& r : rows)
      std::printf("%-*s  %-34s  %8.3f ms\n", static_cast<int>(w), r.file.c_str(),
                  r.verdict.c_str(), r.total_ms);
  }
  // continue past individual failures; the exit code reflects the worst row
  int code = 0;
  for (const BenchRow& r : rows) code = std::max(code, r.code);
  return files.empty() ? 0 : code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tq — types-based trace equivalence prover with a bounded oracle"};
  app.require_subcommand(1);

  Common common;
  tq_options_init(&common.opts);
  app.add_flag("--json", common.json, "emit JSON reports");
  app.add_option("--trace-depth", common.opts.trace_depth, "oracle: visible actions per trace");
  app.add_option("--recipe-depth", common.opts.recipe_depth, "oracle: attacker term depth");
  app.add_option("--repl-bound", common.opts.repl_bound, "oracle: unfoldings per replication");
  app.add_option("--max-input-values", common.opts.max_input_values,
                 "oracle: value classes explored per input step");

  std::string path, dir, replay_path;
  int parallel = 1;

  CLI::App* run = app.add_subcommand("run", "prove equivalence for one protocol file");
  run->fallthrough();
  run->add_option("file", path, "protocol file (.tq)")->required();
  run->add_flag("--dump-constraints", common.opts.dump_constraints,
                "print the generated constraint entries");

  CLI::App* bench = app.add_subcommand("bench", "run every .tq file in a directory");
  bench->fallthrough();
  bench->add_option("dir", dir, "corpus directory")->required();
  bench->add_option("--parallel", parallel, "number of worker threads");

  CLI::App* oracle = app.add_subcommand("oracle", "bounded brute-force equivalence search");
  oracle->fallthrough();
  oracle->add_option("file", path, "protocol file (.tq)")->required();
  oracle->add_option("--replay", replay_path, "replay a recorded witness file");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return do_run(path, common);
  if (bench->parsed()) return do_bench(dir, parallel, common);
  if (oracle->parsed()) return do_oracle(path, replay_path, common);
  return 2;
}
