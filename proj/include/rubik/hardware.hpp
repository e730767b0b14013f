#pragma once

#include <cstdint>
#include <string>

#include "rubik/errors.hpp"

namespace rubik {

/// Modeled architecture parameters. Defaults follow the reference platform:
/// an 8x8 PE array with 4x8 MACs per PE, 32 GB/s of DRAM bandwidth split
/// across two edge memory controllers, a 2 MB global buffer for weights,
/// and a 128 KB private cache per PE split 96/32 between the feature (G-D)
/// and partial-result (G-C) caches.
struct HardwareConfig {
  std::uint32_t pe_rows = 8;
  std::uint32_t pe_cols = 8;
  std::uint32_t mac_rows = 4;
  std::uint32_t mac_cols = 8;
  std::uint64_t clock_hz = 500'000'000;
  std::uint64_t mem_bandwidth_bytes_per_s = 32'000'000'000ull;
  std::uint64_t global_buffer_bytes = 2ull << 20;
  std::uint64_t gd_cache_bytes = 96ull << 10;
  std::uint64_t gc_cache_bytes = 32ull << 10;
  std::uint64_t register_file_bytes = 2ull << 10;
  std::uint32_t noc_hop_cycles = 1;
  std::uint32_t noc_link_bytes_per_cycle = 32;
  std::uint32_t dram_latency_cycles = 100;
  std::uint32_t element_bytes = 4;
  std::uint32_t cache_hit_latency_cycles = 2;
  std::uint32_t lsq_depth = 16;
  std::uint32_t noc_queue_depth = 8;

  std::size_t num_pes() const { return static_cast<std::size_t>(pe_rows) * pe_cols; }

  /// Aggregate DRAM bytes per clock cycle (both controllers together).
  double bytes_per_cycle_total() const {
    return static_cast<double>(mem_bandwidth_bytes_per_s) / static_cast<double>(clock_hz);
  }

  /// Bytes per cycle of one of the two edge controllers.
  double bytes_per_cycle_per_controller() const { return bytes_per_cycle_total() / 2.0; }

  void validate() const {
    auto positive = [](std::uint64_t v, const char* name) {
      if (v == 0) throw ConfigError(std::string("HardwareConfig: ") + name + " must be positive");
    };
    positive(pe_rows, "pe_rows");
    positive(pe_cols, "pe_cols");
    positive(mac_rows, "mac_rows");
    positive(mac_cols, "mac_cols");
    positive(clock_hz, "clock_hz");
    positive(mem_bandwidth_bytes_per_s, "mem_bandwidth_bytes_per_s");
    positive(global_buffer_bytes, "global_buffer_bytes");
    positive(gd_cache_bytes, "gd_cache_bytes");
    positive(gc_cache_bytes, "gc_cache_bytes");
    positive(register_file_bytes, "register_file_bytes");
    positive(noc_hop_cycles, "noc_hop_cycles");
    positive(noc_link_bytes_per_cycle, "noc_link_bytes_per_cycle");
    positive(element_bytes, "element_bytes");
    positive(cache_hit_latency_cycles, "cache_hit_latency_cycles");
    positive(lsq_depth, "lsq_depth");
    positive(noc_queue_depth, "noc_queue_depth");
  }
};

}  // namespace rubik
