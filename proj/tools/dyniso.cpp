// dyniso: replay change scenarios against the dynamic engines.
//
//   dyniso <mode> --input FILE [--verify] [--seed S] [--epoch E]
//          [--max-candidates K] [--report json|text] [--timing]
//   dyniso gen --kind MODE --n N --batches B --batch-size K --seed S [...]
//
// Exit status: 0 all answers fine, 1 a mismatch or a failed query,
// 2 bad usage, unreadable input or a scenario that does not parse.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "dyniso/harness.hpp"

namespace {

using namespace dyniso;
using namespace dyniso::harness;

int run_mode(Mode mode, const std::string& input, const RunOptions& opt, const std::string& report, bool timing) {
  std::ifstream in(input, std::ios::binary);
  if (!in) {
    std::cerr << "dyniso: cannot read " << input << "\n";
    return 2;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  Scenario sc;
  try {
    sc = parse_scenario(buf.str());
  } catch (const Error& e) {
    std::cerr << input << ": " << e.what() << "\n";
    return 2;
  }
  try {
    if (timing) {
      const auto rep = time_scenario(sc, mode, opt);
      if (report == "text")
        std::cout << mode_name(mode) << " n=" << rep.n << " batches=" << rep.batches
                  << " dynamic_us/batch=" << rep.dynamic_per_batch() << " scratch_us/batch=" << rep.scratch_per_batch()
                  << " speedup=" << rep.speedup() << "\n";
      else
        std::cout << rep.to_json().dump() << "\n";
      return 0;
    }
    const auto res = run_scenario(sc, mode, opt);
    for (const auto& r : res.records) std::cout << (report == "text" ? r.to_text() : r.to_json().dump()) << "\n";
    if (!res.abort_reason.empty()) std::cerr << "dyniso: aborted: " << res.abort_reason << "\n";
    std::cerr << "dyniso: " << res.records.size() << " queries, " << res.mismatches << " mismatches, " << res.errors
              << " errors\n";
    return res.ok() ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << input << ": " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic rank, reachability, distance and matching over change scenarios"};
  app.require_subcommand(1);

  RunOptions opt;
  std::string input, report = "json";
  bool timing = false;
  int status = 0;

  for (Mode mode : {Mode::rank, Mode::reach, Mode::dist, Mode::match_det, Mode::match_rank}) {
    auto* sub = app.add_subcommand(std::string(mode_name(mode)), "run a scenario in " + std::string(mode_name(mode)) + " mode");
    sub->add_option("--input", input, "scenario file")->required();
    sub->add_flag("--verify", opt.verify, "cross-check every answer with an oracle");
    sub->add_option("--seed", opt.seed, "seed for circulations and primes");
    sub->add_option("--epoch", opt.epoch_length, "batches between rebuilds")->check(CLI::PositiveNumber);
    sub->add_option("--max-candidates", opt.max_candidates, "cap on weight candidates per epoch")
        ->check(CLI::PositiveNumber);
    sub->add_option("--report", report, "report format")->check(CLI::IsMember({"json", "text"}));
    sub->add_flag("--timing", timing, "compare dynamic updates with from-scratch recomputation");
    sub->callback([&, mode] { status = run_mode(mode, input, opt, report, timing); });
  }

  std::string kind = "rank", out;
  std::size_t n = 8, batches = 10, batch_size = 2;
  u64 seed = 1;
  GenOptions go;
  auto* gen = app.add_subcommand("gen", "write a seeded random scenario");
  gen->add_option("--kind", kind, "scenario kind (a mode name)")
      ->check(CLI::IsMember({"rank", "reach", "dist", "match-det", "match-rank"}));
  gen->add_option("--n", n, "vertices or matrix dimension")->check(CLI::PositiveNumber);
  gen->add_option("--batches", batches, "batches, the initial load included")->check(CLI::PositiveNumber);
  gen->add_option("--batch-size", batch_size, "changes per batch")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--prime", go.prime, "rank modulus");
  gen->add_option("--max-len", go.max_len, "largest edge length in dist scenarios")->check(CLI::PositiveNumber);
  gen->add_option("--fill", go.fill, "density of the initial rank matrix")->check(CLI::Range(0.0, 1.0));
  gen->add_option("-o,--output", out, "output file (default stdout)");
  gen->callback([&] {
    try {
      const auto text = gen_scenario(*parse_mode(kind), n, batches, batch_size, seed, go);
      if (out.empty()) {
        std::cout << text;
      } else {
        std::ofstream f(out, std::ios::binary);
        f << text;
        if (!f) {
          std::cerr << "dyniso: cannot write " << out << "\n";
          status = 2;
        }
      }
    } catch (const Error& e) {
      std::cerr << "dyniso gen: " << e.what() << "\n";
      status = 2;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return status;
}
