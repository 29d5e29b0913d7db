#pragma once

#include <map>
#include <string>

#include "ifsim/common.hpp"

namespace ifsim {

enum class MemRegion { VM, NVM };

inline const char* to_string(MemRegion r) { return r == MemRegion::VM ? "vm" : "nvm"; }

struct MemoryError : std::runtime_error {
  explicit MemoryError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Region {
  MemRegion kind = MemRegion::VM;
  std::size_t capacity_bytes = 0;
  std::size_t used_bytes = 0;
  // Relative execution cost of running from this region. Actual task costs
  // come from per-workload measurements; these are informational defaults for
  // regions and must be >= 1.
  double time_multiplier = 1.0;
  double energy_multiplier = 1.0;
};

struct Allocation {
  AllocId id = 0;
  MemRegion region = MemRegion::VM;
  std::size_t bytes = 0;
  std::string purpose;  // "stack", "working_copy", "metadata", ...
  TaskUid owner = 0;    // 0 for system-owned allocations
};

// Byte accounting for the two memories. Payload bytes are stored by the
// owning modules; this model enforces capacity and volatility.
class MemoryModel {
 public:
  MemoryModel() : MemoryModel(0, 0) {}

  MemoryModel(std::size_t vm_capacity, std::size_t nvm_capacity) {
    vm_.kind = MemRegion::VM;
    vm_.capacity_bytes = vm_capacity;
    nvm_.kind = MemRegion::NVM;
    nvm_.capacity_bytes = nvm_capacity;
  }

  const Region& region(MemRegion r) const { return r == MemRegion::VM ? vm_ : nvm_; }

  AllocId allocate(MemRegion r, std::size_t bytes, std::string purpose, TaskUid owner) {
    Region& reg = r == MemRegion::VM ? vm_ : nvm_;
    if (reg.used_bytes + bytes > reg.capacity_bytes) {
      throw MemoryError(std::string(to_string(r)) + " out of memory: need " +
                        std::to_string(bytes) + " bytes, free " +
                        std::to_string(reg.capacity_bytes - reg.used_bytes) + " (" + purpose +
                        ")");
    }
    reg.used_bytes += bytes;
    AllocId id = next_id_++;
    allocs_.emplace(id, Allocation{id, r, bytes, std::move(purpose), owner});
    return id;
  }

  void free(AllocId id) {
    auto it = allocs_.find(id);
    if (it == allocs_.end()) throw MemoryError("free of unknown allocation");
    Region& reg = it->second.region == MemRegion::VM ? vm_ : nvm_;
    reg.used_bytes -= it->second.bytes;
    allocs_.erase(it);
  }

  bool alive(AllocId id) const { return allocs_.count(id) > 0; }

  const Allocation& info(AllocId id) const {
    auto it = allocs_.find(id);
    if (it == allocs_.end()) throw LogicError("info of unknown allocation");
    return it->second;
  }

  // VM loses everything at a power failure; NVM is unaffected. Idempotent.
  void on_power_failure() {
    for (auto it = allocs_.begin(); it != allocs_.end();) {
      if (it->second.region == MemRegion::VM) {
        it = allocs_.erase(it);
      } else {
        ++it;
      }
    }
    vm_.used_bytes = 0;
  }

  // used_bytes must equal the sum of live allocation sizes in each region.
  bool audit() const {
    std::size_t vm = 0, nvm = 0;
    for (const auto& [id, a] : allocs_) {
      (a.region == MemRegion::VM ? vm : nvm) += a.bytes;
    }
    return vm == vm_.used_bytes && nvm == nvm_.used_bytes;
  }

  std::size_t live_allocations() const { return allocs_.size(); }

 private:
  Region vm_, nvm_;
  std::map<AllocId, Allocation> allocs_;
  AllocId next_id_ = 1;
};

}  // namespace ifsim
