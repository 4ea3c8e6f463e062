#include "smr/timeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace smr::timeline {
namespace {

constexpr std::array<std::string_view, 5> kind_names = {
    "BATCH_FREE", "SINGLE_FREE", "EPOCH_ADVANCE", "TOKEN_PASS", "GARBAGE_COUNT"};

std::uint64_t parse_u64(std::string_view s, const std::filesystem::path& path) {
  std::uint64_t v = 0;
  if (s.empty()) throw std::runtime_error("empty field in " + path.string());
  for (char c : s) {
    if (c < '0' || c > '9') throw std::runtime_error("bad number '" + std::string(s) + "' in " + path.string());
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

}  // namespace

std::string_view to_string(event_kind kind) { return kind_names.at(static_cast<std::size_t>(kind)); }

std::optional<event_kind> parse_kind(std::string_view name) {
  for (std::size_t i = 0; i < kind_names.size(); ++i)
    if (kind_names[i] == name) return static_cast<event_kind>(i);
  return std::nullopt;
}

event_buffer::event_buffer(std::size_t capacity, overflow_policy policy)
    : events_(std::make_unique<event[]>(capacity)), capacity_(capacity), policy_(policy) {}

std::vector<event> event_buffer::events() const {
  std::vector<event> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) out.push_back(events_[(head_ + i) % capacity_]);
  return out;
}

void event_buffer::clear() {
  size_ = 0;
  head_ = 0;
  dropped_ = 0;
  attempted_ = 0;
}

recorder::recorder(std::size_t threads, std::size_t capacity, overflow_policy policy) : origin_ns_(now_ns()) {
  buffers_.reserve(threads);
  for (std::size_t i = 0; i < threads; ++i) buffers_.push_back(std::make_unique<event_buffer>(capacity, policy));
}

std::vector<std::filesystem::path> recorder::flush(const std::filesystem::path& dir,
                                                   const std::map<std::string, std::string>& run_config) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create timeline directory " + dir.string());

  std::vector<fs::path> written;
  for (std::size_t t = 0; t < buffers_.size(); ++t) {
    const auto path = dir / ("thread_" + std::to_string(t) + ".csv");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << csv_header << '\n';
    for (const auto& e : buffers_[t]->events())
      out << to_string(e.kind) << ',' << e.start_ns << ',' << e.end_ns << ',' << e.value << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
    written.push_back(path);
  }

  const auto manifest_path = dir / "manifest.txt";
  const auto tmp = dir / "manifest.txt.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << "thread_count=" << buffers_.size() << '\n';
    out << "clock=steady_clock\n";
    out << "clock_origin_ns=" << origin_ns_ << '\n';
    out << "capacity=" << (buffers_.empty() ? default_capacity : buffers_.front()->capacity()) << '\n';
    out << "overflow_policy="
        << (!buffers_.empty() && buffers_.front()->policy() == overflow_policy::overwrite_oldest ? "overwrite_oldest"
                                                                                                  : "drop_newest")
        << '\n';
    for (std::size_t t = 0; t < buffers_.size(); ++t) {
      out << "recorded_" << t << '=' << buffers_[t]->size() << '\n';
      out << "dropped_" << t << '=' << buffers_[t]->dropped() << '\n';
    }
    for (const auto& [k, v] : run_config) out << "config." << k << '=' << v << '\n';
    const auto wall = std::chrono::duration_cast<std::chrono::seconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
    out << "created_unix=" << wall << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, manifest_path, ec);
  if (ec) throw std::runtime_error("cannot publish " + manifest_path.string());
  written.push_back(manifest_path);
  return written;
}

std::vector<event> filter_threshold(std::span<const event> events, std::uint64_t min_duration_ns) {
  std::vector<event> out;
  std::copy_if(events.begin(), events.end(), std::back_inserter(out),
               [&](const event& e) { return e.duration_ns() >= min_duration_ns; });
  return out;
}

std::vector<event> read_thread_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != csv_header) throw std::runtime_error("bad header in " + path.string());
  std::vector<event> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<std::string_view, 4> fields;
    std::string_view rest = line;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (i == 3)) throw std::runtime_error("bad row in " + path.string());
      fields[i] = rest.substr(0, comma);
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
    const auto kind = parse_kind(fields[0]);
    if (!kind) throw std::runtime_error("unknown event kind '" + std::string(fields[0]) + "'");
    out.push_back(event{*kind, parse_u64(fields[1], path), parse_u64(fields[2], path), parse_u64(fields[3], path)});
  }
  return out;
}

manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  manifest m;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

}  // namespace smr::timeline
