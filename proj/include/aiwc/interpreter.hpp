#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aiwc/error.hpp"
#include "aiwc/kernel.hpp"
#include "aiwc/rng.hpp"
#include "aiwc/trace.hpp"

namespace aiwc {

struct NDRange {
  std::array<std::uint64_t, 3> global_size{1, 1, 1};
  std::array<std::uint64_t, 3> local_size{1, 1, 1};

  std::uint64_t work_items() const {
    return global_size[0] * global_size[1] * global_size[2];
  }

  void validate() const {
    for (int d = 0; d < 3; ++d) {
      if (global_size[d] == 0 || local_size[d] == 0)
        throw ExecutionError("ndrange sizes must be positive");
      if (global_size[d] % local_size[d] != 0)
        throw ExecutionError("local size must divide global size (dim " +
                             std::to_string(d) + ")");
    }
  }
};

inline constexpr std::uint64_t kDefaultFuel = 1'000'000;

// Loads return a fixed hash of the address rather than modelled memory
// contents; data-dependent control flow stays reproducible without a memory
// image.
inline std::int64_t loaded_value(std::uint64_t address) {
  return static_cast<std::int64_t>(mix64(address ^ 0xa1bcc5e870f39a1dull));
}

namespace detail {

class WorkItemCpu {
 public:
  WorkItemCpu(const Kernel& kernel, const NDRange& ndrange,
              const std::vector<std::int64_t>& args, WorkItemId wi)
      : kernel_(kernel), args_(args), wi_(wi),
        registers_(static_cast<std::size_t>(kernel.register_count), 0) {
    for (int d = 0; d < 3; ++d) {
      const std::uint64_t gid = d == 0 ? wi.x : d == 1 ? wi.y : wi.z;
      gid_[d] = static_cast<std::int64_t>(gid);
      lid_[d] = static_cast<std::int64_t>(gid % ndrange.local_size[d]);
      grp_[d] = static_cast<std::int64_t>(gid / ndrange.local_size[d]);
    }
  }

  // Runs to halt, appending one event per executed instruction.
  void run(std::uint64_t fuel, std::vector<Event>& events) {
    std::size_t pc = 0;
    std::uint64_t used = 0;
    for (;;) {
      if (used == fuel)
        throw ExecutionError("fuel exhausted after " + std::to_string(fuel) +
                             " instructions in work-item " + wi_string());
      const Instruction& ins = kernel_.instructions[pc];
      ++used;
      switch (ins.opcode) {
        case Opcode::Halt:
          events.push_back(
              {wi_, EventKind::Op, Opcode::Halt, ins.width, 0, 0, false});
          return;
        case Opcode::Barrier:
          events.push_back(
              {wi_, EventKind::Barrier, Opcode::Barrier, ins.width, 0, 0,
               false});
          ++pc;
          break;
        case Opcode::Branch: {
          const bool taken =
              !ins.condition || eval(*ins.condition) != 0;
          events.push_back({wi_, EventKind::Branch, Opcode::Branch, ins.width,
                            0, static_cast<std::int32_t>(pc), taken});
          pc = taken ? static_cast<std::size_t>(ins.branch_target) : pc + 1;
          break;
        }
        case Opcode::Load: {
          const std::uint64_t addr = eval_addr(ins.addr);
          registers_[static_cast<std::size_t>(ins.dst)] = loaded_value(addr);
          events.push_back(
              {wi_, EventKind::Mem, Opcode::Load, ins.width, addr, 0, false});
          ++pc;
          break;
        }
        case Opcode::Store: {
          const std::uint64_t addr = eval_addr(ins.addr);
          eval(ins.srcs[0]);  // value is discarded; only the access matters
          events.push_back(
              {wi_, EventKind::Mem, Opcode::Store, ins.width, addr, 0, false});
          ++pc;
          break;
        }
        default: {
          registers_[static_cast<std::size_t>(ins.dst)] = alu(ins);
          events.push_back(
              {wi_, EventKind::Op, ins.opcode, ins.width, 0, 0, false});
          ++pc;
          break;
        }
      }
    }
  }

 private:
  std::string wi_string() const {
    return "(" + std::to_string(wi_.x) + "," + std::to_string(wi_.y) + "," +
           std::to_string(wi_.z) + ")";
  }

  std::int64_t eval(const Operand& o) const {
    switch (o.kind) {
      case Operand::Kind::Register:
        return registers_[static_cast<std::size_t>(o.index)];
      case Operand::Kind::Immediate: return o.value;
      case Operand::Kind::GlobalId: return gid_[o.index];
      case Operand::Kind::LocalId: return lid_[o.index];
      case Operand::Kind::GroupId: return grp_[o.index];
      case Operand::Kind::Param:
        return args_[static_cast<std::size_t>(o.index)];
    }
    return 0;
  }

  // wrapping signed arithmetic via unsigned casts; no UB on overflow
  static std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) +
                                     static_cast<std::uint64_t>(b));
  }
  static std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) *
                                     static_cast<std::uint64_t>(b));
  }

  std::int64_t alu(const Instruction& ins) const {
    const std::int64_t a = eval(ins.srcs[0]);
    const std::int64_t b = ins.srcs.size() > 1 ? eval(ins.srcs[1]) : 0;
    switch (ins.opcode) {
      case Opcode::Add: return wrap_add(a, b);
      case Opcode::Sub: return wrap_add(a, -b);
      case Opcode::Mul: return wrap_mul(a, b);
      case Opcode::Div:
        if (b == 0)
          throw ExecutionError("division by zero in work-item " + wi_string());
        if (b == -1) return wrap_mul(a, -1);  // avoid INT64_MIN / -1 trap
        return a / b;
      case Opcode::Mad: return wrap_add(wrap_mul(a, b), eval(ins.srcs[2]));
      case Opcode::And:
        return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) &
                                         static_cast<std::uint64_t>(b));
      case Opcode::Or:
        return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) |
                                         static_cast<std::uint64_t>(b));
      case Opcode::Xor:
        return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) ^
                                         static_cast<std::uint64_t>(b));
      case Opcode::Shl:
        return static_cast<std::int64_t>(static_cast<std::uint64_t>(a)
                                         << (static_cast<std::uint64_t>(b) &
                                             63));
      case Opcode::Cmp: return a < b ? 1 : 0;
      case Opcode::Mov: return a;
      default: return 0;
    }
  }

  std::uint64_t eval_addr(const AddrExpr& expr) const {
    std::uint64_t sum = static_cast<std::uint64_t>(expr.bias);
    for (const AddrTerm& t : expr.terms)
      sum += static_cast<std::uint64_t>(t.scale) *
             static_cast<std::uint64_t>(eval(t.atom));
    return sum;
  }

  const Kernel& kernel_;
  const std::vector<std::int64_t>& args_;
  WorkItemId wi_;
  std::vector<std::int64_t> registers_;
  std::array<std::int64_t, 3> gid_{}, lid_{}, grp_{};
};

}  // namespace detail

// Executes a kernel over an NDRange and returns the event trace.
//
// Deterministic: identical inputs produce byte-identical traces. Work-items
// run sequentially to completion in ascending linear id (gid0 fastest:
// linear = gid0 + gsz0*(gid1 + gsz1*gid2)). Barriers are recorded, not
// synchronized; no Trace metric depends on cross-work-item interleaving.
inline Trace execute(const Kernel& kernel, const NDRange& ndrange,
                     const std::map<std::string, std::int64_t>& args = {},
                     std::uint64_t fuel = kDefaultFuel) {
  kernel.validate();
  ndrange.validate();
  if (fuel == 0) throw ExecutionError("fuel must be positive");

  std::vector<std::int64_t> arg_values(kernel.params.size(), 0);
  std::vector<bool> bound(kernel.params.size(), false);
  for (const auto& [name, value] : args) {
    bool found = false;
    for (std::size_t i = 0; i < kernel.params.size(); ++i) {
      if (kernel.params[i] == name) {
        arg_values[i] = value;
        bound[i] = true;
        found = true;
        break;
      }
    }
    if (!found)
      throw ExecutionError("kernel '" + kernel.name +
                           "' has no parameter '" + name + "'");
  }
  for (std::size_t i = 0; i < kernel.params.size(); ++i)
    if (!bound[i])
      throw ExecutionError("parameter '" + kernel.params[i] + "' is unbound");

  Trace trace;
  trace.work_item_count = ndrange.work_items();
  for (std::uint64_t z = 0; z < ndrange.global_size[2]; ++z)
    for (std::uint64_t y = 0; y < ndrange.global_size[1]; ++y)
      for (std::uint64_t x = 0; x < ndrange.global_size[0]; ++x) {
        detail::WorkItemCpu cpu(kernel, ndrange, arg_values,
                                {static_cast<std::uint32_t>(x),
                                 static_cast<std::uint32_t>(y),
                                 static_cast<std::uint32_t>(z)});
        cpu.run(fuel, trace.events);
      }
  return trace;
}

}  // namespace aiwc
