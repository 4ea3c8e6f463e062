#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "smr/bench/harness.hpp"

namespace smr::bench {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string timestamp() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void publish(const std::filesystem::path& dir, const std::string& name, const std::string& body) {
  const auto tmp = dir / (name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw smr_error("cannot write " + tmp.string());
    out << body;
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw smr_error("cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, dir / name, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw smr_error("cannot publish " + (dir / name).string() + ": " + ec.message());
  }
}

}  // namespace

std::string results_csv(const std::vector<trial_result>& results) {
  std::ostringstream o;
  o << results_header << '\n';
  for (const auto& r : results) {
    o << r.threads << ',' << r.reclaimer << ',' << to_string(r.policy) << ',' << fmt(r.ops_per_sec) << ','
      << fmt(r.peak_mib) << ',' << r.retired << ',' << r.freed << ',' << r.epochs << ',' << r.ds << ','
      << r.trial << ',' << r.seed << ',' << r.ops << ',' << fmt(r.duration_s) << ',' << r.freed_in_run << ','
      << r.leaked << ',' << fmt(r.pct_time_freeing) << ',' << r.oracle_violations << ',' << r.canary_hits << ','
      << r.timeline_drops << ',' << r.prefill_size << ',' << r.rss_samples << ',' << (r.rss_ok ? 1 : 0) << ','
      << r.node_size << ',' << r.keyrange << ',' << r.allocator << ',' << r.config_id << '\n';
  }
  return o.str();
}

std::string summary_csv(const std::vector<trial_result>& results) {
  // first-seen order of configs
  std::vector<std::string> order;
  std::map<std::string, std::vector<const trial_result*>> groups;
  for (const auto& r : results) {
    auto& g = groups[r.config_id];
    if (g.empty()) order.push_back(r.config_id);
    g.push_back(&r);
  }
  std::ostringstream o;
  o << "config_id,threads,reclaimer,policy,ds,trials,ops_per_sec_mean,ops_per_sec_min,ops_per_sec_max,"
       "peak_mib_mean,peak_mib_min,peak_mib_max,epochs_mean,freed_in_run_mean,pct_time_freeing_mean\n";
  for (const auto& id : order) {
    const auto& g = groups[id];
    auto stat = [&](auto field) {
      double sum = 0, lo = field(*g[0]), hi = lo;
      for (const auto* r : g) {
        const double v = field(*r);
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      return std::array<double, 3>{sum / static_cast<double>(g.size()), lo, hi};
    };
    const auto tput = stat([](const trial_result& r) { return r.ops_per_sec; });
    const auto mem = stat([](const trial_result& r) { return r.peak_mib; });
    const auto ep = stat([](const trial_result& r) { return static_cast<double>(r.epochs); });
    const auto fr = stat([](const trial_result& r) { return static_cast<double>(r.freed_in_run); });
    const auto pf = stat([](const trial_result& r) { return r.pct_time_freeing; });
    const auto& f = *g[0];
    o << id << ',' << f.threads << ',' << f.reclaimer << ',' << to_string(f.policy) << ',' << f.ds << ','
      << g.size() << ',' << fmt(tput[0]) << ',' << fmt(tput[1]) << ',' << fmt(tput[2]) << ',' << fmt(mem[0]) << ','
      << fmt(mem[1]) << ',' << fmt(mem[2]) << ',' << fmt(ep[0]) << ',' << fmt(fr[0]) << ',' << fmt(pf[0]) << '\n';
  }
  return o.str();
}

std::string garbage_csv(const std::vector<trial_result>& results) {
  std::ostringstream o;
  o << "config_id,trial,epoch,garbage,threads_reporting\n";
  for (const auto& r : results)
    for (const auto& g : r.garbage)
      o << r.config_id << ',' << r.trial << ',' << g.epoch << ',' << g.garbage << ',' << g.threads_reporting << '\n';
  return o.str();
}

void emit_results(const std::vector<trial_result>& results, const std::filesystem::path& dir) {
  if (results.empty()) throw smr_error("no results to emit");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw smr_error("cannot create " + dir.string());
  // Build everything before touching the directory.
  const auto res = "# generated " + timestamp() + "\n" + results_csv(results);
  const auto sum = summary_csv(results);
  const auto gar = garbage_csv(results);
  publish(dir, "results.csv", res);
  publish(dir, "garbage.csv", gar);
  publish(dir, "summary.csv", sum);
}

}  // namespace smr::bench
