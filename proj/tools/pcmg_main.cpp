// Command-line front end: hour-ahead and islanding balancing plans, storage
// sizing appraisal, mr/mrr summaries, and the distributed learning-set
// generation worker/coordinator pair.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pcmg/balancer.hpp"
#include "pcmg/distgen.hpp"
#include "pcmg/lsgen.hpp"
#include "pcmg/planner.hpp"
#include "pcmg/scenario.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> parse_levels(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    double v = std::stod(tok);
    if (v > 1.0) v /= 100.0;  // accept "35" as well as "0.35"
    if (v <= 0.0 || v > 1.0)
      throw std::runtime_error("profitability level '" + tok +
                               "' is outside (0, 100]%");
    out.push_back(v);
  }
  if (out.empty()) throw std::runtime_error("no profitability levels given");
  return out;
}

std::vector<std::string> parse_endpoints(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream ofs(path, std::ios::binary);
  if (!ofs) throw std::runtime_error("cannot open '" + path + "' for writing");
  ofs << text;
  if (!ofs.good()) throw std::runtime_error("short write to '" + path + "'");
}

bool plan_has_rules(const pcmg::BalancingPlan& plan) {
  for (const auto& lvl : plan.levels)
    if (!lvl.rules.empty()) return true;
  return false;
}

// "HOST:PORT" or bare "PORT"; only loopback binding is supported.
int parse_listen(const std::string& listen) {
  std::string host, port = listen;
  const auto colon = listen.rfind(':');
  if (colon != std::string::npos) {
    host = listen.substr(0, colon);
    port = listen.substr(colon + 1);
  }
  if (!host.empty() && host != "127.0.0.1" && host != "localhost" &&
      host != "0.0.0.0")
    throw std::runtime_error("serve-worker binds loopback only; '" + host +
                             "' is not a loopback host");
  std::size_t used = 0;
  const int p = std::stoi(port, &used);
  if (used != port.size() || p < 0 || p > 65535)
    throw std::runtime_error("'" + port + "' is not a TCP port");
  return p;
}

struct CommonOpts {
  std::string scenario_path = "scenarios/pcmg.scenario";
  std::uint64_t seed = 1;
  int samples = 1000;
  std::string levels_csv = "35,30,25,20,15,10";
  std::string out_path;
};

void add_common(CLI::App* sub, CommonOpts& o, bool with_levels) {
  sub->add_option("--scenario", o.scenario_path, "scenario file to plan for")
      ->capture_default_str();
  sub->add_option("--seed", o.seed, "master RNG seed")->capture_default_str();
  sub->add_option("--samples", o.samples, "Monte Carlo samples per learning set")
      ->capture_default_str();
  if (with_levels)
    sub->add_option("--levels", o.levels_csv,
                    "profitability levels, percent, loosest first")
        ->capture_default_str();
  sub->add_option("--out", o.out_path, "write the machine-readable result here");
}

int cmd_plan_hour(const CommonOpts& o) {
  const auto t0 = Clock::now();
  const pcmg::Scenario s = pcmg::load_scenario(o.scenario_path);
  const auto levels = parse_levels(o.levels_csv);
  const pcmg::HourPlans hp = pcmg::plan_hour(s, levels, o.samples, o.seed);
  std::cout << pcmg::format_plan(hp.deficit) << "\n"
            << pcmg::format_plan(hp.excess);
  if (!o.out_path.empty()) {
    std::string j = "{\n\"deficit\": " + pcmg::plan_json(hp.deficit) +
                    ",\n\"excess\": " + pcmg::plan_json(hp.excess) + "\n}\n";
    write_text(o.out_path, j);
  }
  std::fprintf(stderr, "[timing] plan-hour: %.3f s\n", seconds_since(t0));
  return (plan_has_rules(hp.deficit) && plan_has_rules(hp.excess)) ? 0 : 3;
}

int cmd_plan_islanding(const CommonOpts& o) {
  const auto t0 = Clock::now();
  const pcmg::Scenario s = pcmg::load_scenario(o.scenario_path);
  const auto levels = parse_levels(o.levels_csv);
  const pcmg::BalancingPlan plan =
      pcmg::plan_islanding(s, levels, o.samples, o.seed);
  std::cout << pcmg::format_plan(plan);
  if (!o.out_path.empty()) write_text(o.out_path, pcmg::plan_json(plan));
  std::fprintf(stderr, "[timing] plan-islanding: %.3f s\n", seconds_since(t0));
  return plan_has_rules(plan) ? 0 : 3;
}

int cmd_plan_storage(const CommonOpts& o) {
  const auto t0 = Clock::now();
  const pcmg::Scenario s = pcmg::load_scenario(o.scenario_path);
  const pcmg::PlanningTable table = pcmg::plan_storage(s, o.seed, o.samples);
  std::cout << pcmg::format_storage_plan(table);
  if (!o.out_path.empty()) write_text(o.out_path, pcmg::storage_plan_json(table));
  std::fprintf(stderr, "[timing] plan-storage: %.3f s\n", seconds_since(t0));
  for (const auto& opt : table.options)
    if (opt.suitable) return 0;
  return 3;  // nothing on the option grid can carry the year's events
}

int cmd_evaluate_mr(const CommonOpts& o, int repeats) {
  const auto t0 = Clock::now();
  if (repeats < 1) throw std::runtime_error("--repeats must be at least 1");
  const pcmg::Scenario s = pcmg::load_scenario(o.scenario_path);
  const auto levels = parse_levels(o.levels_csv);

  std::vector<double> mr_sum(levels.size(), 0.0), mrr_sum(levels.size(), 0.0);
  std::vector<double> test_sum(levels.size(), 0.0);
  for (int r = 0; r < repeats; ++r) {
    const pcmg::BalancingPlan plan =
        pcmg::plan_islanding(s, levels, o.samples, o.seed + r);
    for (std::size_t i = 0; i < levels.size(); ++i) {
      mr_sum[i] += plan.levels[i].mr.mr;
      mrr_sum[i] += plan.levels[i].mr.mrr;
      test_sum[i] += plan.levels[i].mr.test_size;
    }
  }

  std::ostringstream out;
  out << "misclassification summary (islanding learning set)\n"
      << "scenario: " << s.name << "  digest " << pcmg::scenario_digest_hex(s)
      << "\n"
      << "samples per set: " << o.samples << "   seeds: " << repeats
      << " starting at " << o.seed << "\n\n";
  out << "  level      mean mr   mean mrr   mean test size\n";
  char line[128];
  for (std::size_t i = 0; i < levels.size(); ++i) {
    std::snprintf(line, sizeof line, "  Top-%-3d%%   %6.2f%%    %6.2f%%    %10.1f\n",
                  static_cast<int>(std::lround(levels[i] * 100.0)),
                  100.0 * mr_sum[i] / repeats, 100.0 * mrr_sum[i] / repeats,
                  test_sum[i] / repeats);
    out << line;
  }
  std::cout << out.str();
  if (!o.out_path.empty()) write_text(o.out_path, out.str());
  std::fprintf(stderr, "[timing] evaluate-mr: %.3f s\n", seconds_since(t0));
  return 0;
}

int cmd_serve_worker(const std::string& listen, int fail_after, bool once) {
  pcmg::WorkerOptions opt;
  opt.port = parse_listen(listen);
  opt.fail_after = fail_after;
  opt.once = once;
  pcmg::run_worker(opt);
  return 0;
}

int cmd_run_distributed(const CommonOpts& o, const std::string& workers_csv,
                        int spawn, const std::string& requirement,
                        double magnitude, bool verify) {
  const auto t0 = Clock::now();
  const pcmg::Scenario s = pcmg::load_scenario(o.scenario_path);

  pcmg::BalancingRequirement req;
  if (requirement == "islanding") {
    req.origin = pcmg::Origin::Islanding;
  } else if (requirement == "deficit" || requirement == "excess") {
    req.direction = requirement == "deficit" ? pcmg::Direction::Deficit
                                             : pcmg::Direction::Excess;
    req.origin = pcmg::Origin::LoadDeviation;
    req.magnitude_kw = magnitude;
    if (magnitude <= 0.0)
      throw std::runtime_error("--magnitude must be positive for " + requirement);
  } else {
    throw std::runtime_error("--requirement must be deficit, excess, or islanding");
  }

  std::vector<std::string> endpoints = parse_endpoints(workers_csv);
  if (endpoints.empty()) {
    if (const char* env = std::getenv("PCMG_WORKERS"))
      endpoints = parse_endpoints(env);
  }
  if (endpoints.empty() && spawn <= 0) spawn = 2;
  for (int i = 0; i < spawn; ++i) {
    const int fd = pcmg::open_worker_listener(0);
    endpoints.push_back("127.0.0.1:" + std::to_string(pcmg::listener_port(fd)));
    std::thread(pcmg::serve_worker, fd, pcmg::WorkerOptions{}).detach();
  }

  const pcmg::LearningSet ls =
      pcmg::run_distributed(s, req, o.samples, o.seed, endpoints);

  std::cout << "distributed learning set\n"
            << "scenario: " << s.name << "  digest "
            << pcmg::scenario_digest_hex(s) << "\n"
            << "requirement: " << requirement;
  if (requirement != "islanding") std::cout << " " << magnitude << " kW";
  std::cout << "\nseed " << ls.seed << "  stream " << ls.stream << "  workers "
            << endpoints.size() << "\n"
            << "kept " << ls.diag.kept << " of " << ls.diag.attempted
            << " draws (" << ls.diag.skipped_allocation
            << " skipped by the allocation sampler, " << ls.diag.pf_not_converged
            << " power-flow failures, " << ls.diag.constraint_infeasible
            << " infeasible)\n"
            << "worst power-flow mismatch " << ls.diag.max_mismatch_kw
            << " kW\n";
  if (!o.out_path.empty()) {
    pcmg::save_ls(ls, o.out_path);
    std::cout << "written to " << o.out_path << "\n";
  }
  if (verify) {
    const pcmg::LearningSet single =
        pcmg::generate_ls(s, req, o.samples, o.seed);
    const bool same = pcmg::serialize_ls(ls) == pcmg::serialize_ls(single);
    std::cout << "single-process comparison: "
              << (same ? "byte-identical" : "MISMATCH") << "\n";
    if (!same) return 1;
  }
  std::fprintf(stderr, "[timing] run-distributed: %.3f s\n", seconds_since(t0));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Microgrid energy-balancing toolkit: decision-tree dispatch rules for "
      "hour-ahead and islanding balancing, and battery-storage sizing."};
  app.require_subcommand(1);

  CommonOpts o;
  int repeats = 10;
  std::string listen = "127.0.0.1:0";
  int fail_after = -1;
  bool once = false;
  std::string workers_csv;
  int spawn = 0;
  std::string requirement = "islanding";
  double magnitude = 0.0;
  bool verify = false;
  int rc = 0;

  auto* ph = app.add_subcommand(
      "plan-hour", "balancing rules for both hour-ahead deviation directions");
  add_common(ph, o, true);
  ph->callback([&] { rc = cmd_plan_hour(o); });

  auto* pi = app.add_subcommand(
      "plan-islanding", "balancing rules for an islanding transition");
  add_common(pi, o, true);
  pi->callback([&] { rc = cmd_plan_islanding(o); });

  auto* ps = app.add_subcommand(
      "plan-storage", "appraise storage capacity/SOC options against a "
                      "synthetic year of deviation events");
  add_common(ps, o, false);
  ps->callback([&] { rc = cmd_plan_storage(o); });

  auto* em = app.add_subcommand(
      "evaluate-mr", "misclassification-rate summary across seeds and levels");
  add_common(em, o, true);
  em->add_option("--repeats", repeats, "number of seeds to average over")
      ->capture_default_str();
  em->callback([&] { rc = cmd_evaluate_mr(o, repeats); });

  auto* sw = app.add_subcommand(
      "serve-worker", "serve learning-set generation ranges over TCP");
  sw->add_option("--listen", listen, "loopback HOST:PORT or PORT; 0 = ephemeral")
      ->capture_default_str();
  sw->add_option("--fail-after", fail_after,
                 "drop each connection after streaming this many samples "
                 "(failure injection; -1 = never)")
      ->capture_default_str();
  sw->add_flag("--once", once, "exit after the first connection closes");
  sw->callback([&] { rc = cmd_serve_worker(listen, fail_after, once); });

  auto* rd = app.add_subcommand(
      "run-distributed",
      "generate a learning set across workers and merge deterministically");
  add_common(rd, o, false);
  rd->add_option("--workers", workers_csv,
                 "comma-separated worker endpoints (default: $PCMG_WORKERS)");
  rd->add_option("--spawn", spawn,
                 "serve this many in-process loopback workers (default 2 when "
                 "no endpoints are given)");
  rd->add_option("--requirement", requirement,
                 "deficit | excess | islanding")
      ->capture_default_str();
  rd->add_option("--magnitude", magnitude, "requirement size in kW");
  rd->add_flag("--verify", verify,
               "also generate single-process and compare byte-for-byte");
  rd->callback([&] {
    rc = cmd_run_distributed(o, workers_csv, spawn, requirement, magnitude,
                             verify);
  });

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
