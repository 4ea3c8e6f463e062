#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "smr/bench/harness.hpp"
#include "smr/bench/rbf_probe.hpp"

using namespace smr;
using namespace smr::bench;
namespace fs = std::filesystem;

namespace {

bench_config tiny(const std::string& rec, std::size_t threads = 1) {
  bench_config c;
  c.reclaimer = rec;
  c.threads = threads;
  c.keyrange = 100;
  c.duration_s = 0.2;
  c.trials = 1;
  c.node_size = 64;
  c.seed = 7;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string drop_first_line(const std::string& s) { return s.substr(s.find('\n') + 1); }

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("smr-bench-test-" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("config validation") {
  auto c = tiny("debra");
  CHECK_NOTHROW(c.validate());
  c.threads = 0;
  CHECK_THROWS_WITH(c.validate(), "threads must be >= 1");
  c = tiny("debra");
  c.duration_s = 0;
  CHECK_THROWS(c.validate());
  c.ops = 10;
  CHECK_NOTHROW(c.validate());
  c = tiny("nope");
  CHECK_THROWS_WITH(c.validate(), "unknown reclaimer: nope");
  c = tiny("debra");
  c.node_size = 8;
  CHECK_THROWS(c.validate());
}

TEST_CASE("config id names the effective policy") {
  auto c = tiny("token_af", 8);
  CHECK(config_id(c) == "token_af-amortized-bst-t8");
  c = tiny("debra_af");
  c.ds = "list";
  CHECK(config_id(c) == "debra-amortized-list-t1");
}

TEST_CASE("prefill tolerance") {
  CHECK(prefill_tolerance(20'000'000) == 100'000);
  CHECK(prefill_tolerance(100) == 10);
}

TEST_CASE("keyrange 100, one thread: prefill settles near 50 and the trial is sane") {
  auto r = run_trial(tiny("debra"), 0);
  // within tolerance (10) at the last check; the walk goes on until workers park
  CHECK(r.prefill_size >= 35);
  CHECK(r.prefill_size <= 65);
  CHECK(r.ops > 0);
  CHECK(r.ops_per_sec > 0);
  CHECK(r.freed <= r.retired);
  CHECK(r.freed == r.retired);
  CHECK(r.rss_ok);
  CHECK(r.rss_samples >= 10);
}

TEST_CASE("fixed seed, one thread, fixed ops: two runs agree") {
  for (const char* rid : {"debra", "token_naive", "qsbr"}) {
    CAPTURE(rid);
    auto c = tiny(rid);
    c.ops = 50'000;
    c.keyrange = 1000;
    const auto a = run_trial(c, 0);
    const auto b = run_trial(c, 0);
    CHECK(a.ops == 50'000);
    CHECK(a.ops == b.ops);
    CHECK(a.retired == b.retired);
    CHECK(a.prefill_size == b.prefill_size);
    CHECK(a.prefill_ops == b.prefill_ops);
    CHECK(a.freed_in_run == b.freed_in_run);
  }
}

TEST_CASE("every reclaimer conserves objects through a multi-thread trial") {
  for (const auto& rid : reclaimer_ids()) {
    CAPTURE(rid);
    auto c = tiny(rid, 3);
    c.keyrange = 512;
    c.duration_s = 0.1;
    const auto r = run_trial(c, 0);
    if (rid == "none") {
      CHECK(r.freed == 0);
      CHECK(r.leaked == r.retired);
    } else {
      CHECK(r.freed == r.retired);
    }
    CHECK(r.thread_ops.size() == 3);
  }
}

TEST_CASE("prefill that cannot settle times out") {
  auto c = tiny("debra");
  c.insert_pct = 0;  // never grows
  c.prefill_timeout_s = 0.3;
  CHECK_THROWS_WITH(run_trial(c, 0), "prefill timeout");
  c.ops = 100;  // deterministic path
  CHECK_THROWS_WITH(run_trial(c, 0), "prefill timeout");
}

TEST_CASE("leaky peak memory exceeds token_af on the same workload") {
  // Peak RSS is per process, so each side gets a fresh one.
  auto peak = [](const std::string& rid) {
    const auto d = scratch("peak-" + rid);
    const auto cmd = std::string(SMR_BENCH_BIN) + " run -q --reclaimer=" + rid +
                     " --threads=2 --keyrange=10000 --duration=0.5 --trials=1 --seed=3 --out=" + d.string();
    REQUIRE(std::system(cmd.c_str()) == 0);
    const auto body = drop_first_line(slurp(d / "results.csv"));
    const auto line = body.substr(body.find('\n') + 1);
    // threads,reclaimer,policy,ops_per_sec,peak_mib,...
    std::stringstream ss(line);
    std::string cell;
    for (int i = 0; i < 5; ++i) std::getline(ss, cell, ',');
    fs::remove_all(d);
    return std::stod(cell);
  };
  CHECK(peak("none") > peak("token_af"));
}

TEST_CASE("rss sampler collects about one sample per interval") {
  rss_sampler s(10);
  std::this_thread::sleep_for(std::chrono::milliseconds(500));
  s.stop();
  CHECK(s.ok());
  CHECK(s.samples() >= 40);
  CHECK(s.peak_mib() > 0);
}

TEST_CASE("emit_results: rows, summary and re-emit stability") {
  std::vector<trial_result> rs;
  for (const char* rid : {"debra", "token_af"}) {
    auto c = tiny(rid);
    c.ops = 2000;
    for (std::size_t t = 0; t < 3; ++t) rs.push_back(run_trial(c, t));
  }
  const auto d = scratch("emit");
  emit_results(rs, d);
  const auto res = slurp(d / "results.csv");
  CHECK(res.rfind("# generated ", 0) == 0);
  const auto body = drop_first_line(res);
  CHECK(body.rfind(std::string(results_header) + "\n", 0) == 0);
  CHECK(std::count(body.begin(), body.end(), '\n') == 7);
  const auto sum = slurp(d / "summary.csv");
  CHECK(std::count(sum.begin(), sum.end(), '\n') == 3);
  CHECK(sum.find("debra-batch-bst-t1,1,debra,batch,bst,3,") != std::string::npos);
  const auto gar = slurp(d / "garbage.csv");

  emit_results(rs, d);
  CHECK(drop_first_line(slurp(d / "results.csv")) == body);
  CHECK(slurp(d / "summary.csv") == sum);
  CHECK(slurp(d / "garbage.csv") == gar);
  fs::remove_all(d);
}

TEST_CASE("emit_results into an unwritable place fails without a summary") {
  auto c = tiny("debra");
  c.ops = 100;
  std::vector<trial_result> rs{run_trial(c, 0)};
  const auto d = scratch("blocked");
  fs::create_directories(d.parent_path());
  { std::ofstream(d) << "a file, not a directory"; }
  CHECK_THROWS(emit_results(rs, d / "out"));
  CHECK_FALSE(fs::exists(d / "out" / "summary.csv"));
  fs::remove(d);
  CHECK_THROWS(emit_results({}, scratch("empty")));
}

TEST_CASE("timeline output lands in a per-trial directory") {
  auto c = tiny("token_periodic", 2);
  c.timeline_dir = scratch("tl");
  const auto r = run_trial(c, 1);
  const auto dir = c.timeline_dir / (r.config_id + "_trial1");
  CHECK(fs::exists(dir / "manifest.txt"));
  CHECK(fs::exists(dir / "thread_0.csv"));
  CHECK(fs::exists(dir / "thread_1.csv"));
  fs::remove_all(c.timeline_dir);
}

TEST_CASE("rbf probe: conservation in both modes") {
  for (auto mode : {probe_mode::batch, probe_mode::amortized}) {
    rbf_probe_config c;
    c.threads = 4;
    c.batch = 1000;
    c.iterations = 3;
    c.mode = mode;
    const auto r = run_rbf_probe(c);
    CHECK(r.frees == 12'000);
    CHECK(r.allocations == r.frees);
    CHECK(r.remote_frees == r.frees);
    CHECK(r.p50_ns <= r.p99_ns);
    CHECK(r.p99_ns <= r.max_ns);
  }
}

TEST_CASE("rbf probe with one thread has no remote frees") {
  rbf_probe_config c;
  c.threads = 1;
  c.batch = 500;
  const auto r = run_rbf_probe(c);
  CHECK(r.frees == 2000);
  CHECK(r.remote_frees == 0);
  c.batch = 0;
  CHECK_THROWS(run_rbf_probe(c));
}
