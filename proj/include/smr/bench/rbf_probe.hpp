#pragma once

// Remote batch free probe. Thread i frees objects allocated by thread
// (i + 1) mod m, either all at once (batch) or one per loop iteration with
// some filler work in between (amortized). Each free is timed.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace smr::bench {

enum class probe_mode : std::uint8_t { batch, amortized };

std::string_view to_string(probe_mode m);

struct rbf_probe_config {
  std::size_t threads = 8;
  std::size_t object_size = 64;
  std::size_t batch = 32768;
  probe_mode mode = probe_mode::batch;
  std::size_t iterations = 4;  // exchange rounds
  std::size_t filler = 64;     // amortized mode: work units between frees

  void validate() const;
};

struct rbf_probe_result {
  rbf_probe_config config;
  std::uint64_t frees = 0;
  std::uint64_t allocations = 0;
  std::uint64_t remote_frees = 0;
  std::uint64_t p50_ns = 0;
  std::uint64_t p99_ns = 0;
  std::uint64_t max_ns = 0;
  std::uint64_t over_100us = 0;
  std::string allocator;
};

rbf_probe_result run_rbf_probe(const rbf_probe_config& config);

inline constexpr std::string_view rbf_header =
    "mode,threads,batch,size,iterations,frees,allocations,remote_frees,p50_ns,p99_ns,max_ns,over_100us,allocator";

std::string rbf_csv(const std::vector<rbf_probe_result>& results);

}  // namespace smr::bench
