/*
 * Licensed to the Apache Software Foundation (ASF) under one
 * or more contributor license agreements.  See the NOTICE file
 * distributed with this work for additional information
 * regarding copyright ownership.  The ASF licenses this file
 * to you under the Apache License, Version 2.0 (the
 * "License"); you may not use this file except in compliance
 * with the License.  You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing,
 * software distributed under the License is distributed on an
 * "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
 * KIND, either express or implied.  See the License for the
 * specific language governing permissions and limitations
 * under the License.
 */

/*!
 * \file isa.cc
 * \brief Instruction/micro-op codec and disassembler.
 */
#include "vta/isa.h"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "vta/error.h"

namespace vta {
namespace isa {

namespace {

/*!
 * \brief Sequential bit writer over two 64-bit words.
 *  Fields that would cross bit 64 are moved to the second word.
 */
class BitWriter {
 public:
  void Put(const char* name, uint64_t value, uint32_t width) {
    if (width < 64 && (value >> width) != 0) {
      throw Error(ErrorKind::kEncoding,
                  fmt::format("field {} overflows {} bits (value {})", name, width, value));
    }
    Align(width);
    uint32_t word = pos_ / 64;
    uint32_t shift = pos_ % 64;
    words_[word] |= value << shift;
    pos_ += width;
  }

  InstrWord Bytes() const {
    InstrWord out{};
    for (int i = 0; i < 16; ++i) {
      out[i] = static_cast<uint8_t>(words_[i / 8] >> (8 * (i % 8)));
    }
    return out;
  }

 private:
  void Align(uint32_t width) {
    if (pos_ < 64 && pos_ + width > 64) pos_ = 64;
  }

  uint64_t words_[2]{0, 0};
  uint32_t pos_{0};
};

class BitReader {
 public:
  explicit BitReader(std::span<const uint8_t, kInstrBytes> bytes) {
    for (int i = 0; i < 16; ++i) {
      words_[i / 8] |= static_cast<uint64_t>(bytes[i]) << (8 * (i % 8));
    }
  }

  uint64_t Get(uint32_t width) {
    if (pos_ < 64 && pos_ + width > 64) pos_ = 64;
    uint64_t value = words_[pos_ / 64] >> (pos_ % 64);
    if (width < 64) value &= (uint64_t{1} << width) - 1;
    pos_ += width;
    return value;
  }

 private:
  uint64_t words_[2]{0, 0};
  uint32_t pos_{0};
};

// Field visitors. A single layout description per instruction type drives
// both directions of the codec.
struct EncodeVisitor {
  BitWriter& w;
  void operator()(const char* name, const uint32_t& v, uint32_t width) { w.Put(name, v, width); }
  void operator()(const char* name, const bool& v, uint32_t) { w.Put(name, v ? 1 : 0, 1); }
  void operator()(const char* name, const int32_t& v, uint32_t width) {
    int64_t lo = -(int64_t{1} << (width - 1));
    int64_t hi = (int64_t{1} << (width - 1)) - 1;
    if (v < lo || v > hi) {
      throw Error(ErrorKind::kEncoding,
                  fmt::format("field {} overflows signed {} bits (value {})", name, width, v));
    }
    w.Put(name, static_cast<uint64_t>(v) & ((uint64_t{1} << width) - 1), width);
  }
};

struct DecodeVisitor {
  BitReader& r;
  void operator()(const char*, uint32_t& v, uint32_t width) {
    v = static_cast<uint32_t>(r.Get(width));
  }
  void operator()(const char*, bool& v, uint32_t) { v = r.Get(1) != 0; }
  void operator()(const char*, int32_t& v, uint32_t width) {
    uint64_t raw = r.Get(width);
    uint32_t shift = 32 - width;
    v = static_cast<int32_t>(static_cast<uint32_t>(raw) << shift) >> shift;
  }
};

template <typename Deps, typename V>
void VisitDeps(Deps& d, V&& v) {
  v("pop_prev", d.pop_prev, 1);
  v("pop_next", d.pop_next, 1);
  v("push_prev", d.push_prev, 1);
  v("push_next", d.push_next, 1);
}

// Fields after the opcode, in bit order.
template <typename M, typename V>
void VisitMem(M& m, uint32_t& buffer, V&& v) {
  VisitDeps(m.deps, v);
  v("buffer_id", buffer, kMemIdBits);
  v("sram_base", m.sram_base, kSramAddrBits);
  v("dram_base", m.dram_base, kDramAddrBits);
  v("y_size", m.y_size, kSizeBits);
  v("x_size", m.x_size, kSizeBits);
  v("x_stride", m.x_stride, kStrideBits);
  v("y_pad_top", m.y_pad_top, kPadBits);
  v("y_pad_bottom", m.y_pad_bottom, kPadBits);
  v("x_pad_left", m.x_pad_left, kPadBits);
  v("x_pad_right", m.x_pad_right, kPadBits);
}

template <typename G, typename V>
void VisitGemm(G& g, V&& v) {
  VisitDeps(g.deps, v);
  v("reset", g.reset, 1);
  v("uop_begin", g.uop_begin, kUopBeginBits);
  v("uop_end", g.uop_end, kUopEndBits);
  v("lp_out", g.lp_out, kLoopIterBits);
  v("lp_in", g.lp_in, kLoopIterBits);
  v("acc_factor_out", g.acc_factor_out, kAccFactorBits);
  v("acc_factor_in", g.acc_factor_in, kAccFactorBits);
  v("inp_factor_out", g.inp_factor_out, kInpFactorBits);
  v("inp_factor_in", g.inp_factor_in, kInpFactorBits);
  v("wgt_factor_out", g.wgt_factor_out, kWgtFactorBits);
  v("wgt_factor_in", g.wgt_factor_in, kWgtFactorBits);
}

template <typename A, typename V>
void VisitAlu(A& a, uint32_t& alu_opcode, V&& v) {
  VisitDeps(a.deps, v);
  v("reset", a.reset, 1);
  v("uop_begin", a.uop_begin, kUopBeginBits);
  v("uop_end", a.uop_end, kUopEndBits);
  v("lp_out", a.lp_out, kLoopIterBits);
  v("lp_in", a.lp_in, kLoopIterBits);
  v("dst_factor_out", a.dst_factor_out, kAccFactorBits);
  v("dst_factor_in", a.dst_factor_in, kAccFactorBits);
  v("src_factor_out", a.src_factor_out, kInpFactorBits);
  v("src_factor_in", a.src_factor_in, kInpFactorBits);
  v("alu_opcode", alu_opcode, kAluOpcodeBits);
  v("use_imm", a.use_imm, 1);
  v("imm", a.imm, kAluImmBits);
}

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string Hex(uint64_t v) { return v == 0 ? std::string("0") : fmt::format("{:#x}", v); }

std::string FormatDeps(const DepFlags& d) {
  return fmt::format("deps={}{}{}{}", d.pop_prev ? 1 : 0, d.pop_next ? 1 : 0,
                     d.push_prev ? 1 : 0, d.push_next ? 1 : 0);
}

}  // namespace

const char* BufferName(BufferId id) {
  switch (id) {
    case BufferId::kUop:
      return "UOP";
    case BufferId::kWgt:
      return "WGT";
    case BufferId::kInp:
      return "INP";
    case BufferId::kAcc:
      return "ACC";
    case BufferId::kOut:
      return "OUT";
  }
  return "?";
}

const char* AluOpName(AluOp op) {
  switch (op) {
    case AluOp::kMin:
      return "MIN";
    case AluOp::kMax:
      return "MAX";
    case AluOp::kAdd:
      return "ADD";
    case AluOp::kShr:
      return "SHR";
  }
  return "?";
}

std::optional<AluOp> ParseAluOp(const std::string& name) {
  for (AluOp op : {AluOp::kMin, AluOp::kMax, AluOp::kAdd, AluOp::kShr}) {
    if (name == AluOpName(op)) return op;
  }
  return std::nullopt;
}

Opcode OpcodeOf(const Instruction& instr) {
  return std::visit(Overloaded{[](const MemInstr& m) { return m.opcode; },
                               [](const GemmInstr&) { return Opcode::kGemm; },
                               [](const AluInstr&) { return Opcode::kAlu; },
                               [](const FinishInstr&) { return Opcode::kFinish; }},
                    instr);
}

DepFlags& DepsOf(Instruction& instr) {
  return std::visit([](auto& i) -> DepFlags& { return i.deps; }, instr);
}

const DepFlags& DepsOf(const Instruction& instr) {
  return std::visit([](const auto& i) -> const DepFlags& { return i.deps; }, instr);
}

InstrWord encode_instruction(const Instruction& instr) {
  BitWriter w;
  EncodeVisitor enc{w};
  std::visit(Overloaded{
                 [&](const MemInstr& m) {
                   if (m.opcode != Opcode::kLoad && m.opcode != Opcode::kStore) {
                     throw Error(ErrorKind::kEncoding, "memory instruction opcode must be LOAD or STORE");
                   }
                   w.Put("opcode", static_cast<uint32_t>(m.opcode), kOpcodeBits);
                   uint32_t buffer = static_cast<uint32_t>(m.buffer);
                   VisitMem(m, buffer, enc);
                 },
                 [&](const GemmInstr& g) {
                   w.Put("opcode", static_cast<uint32_t>(Opcode::kGemm), kOpcodeBits);
                   VisitGemm(g, enc);
                 },
                 [&](const AluInstr& a) {
                   w.Put("opcode", static_cast<uint32_t>(Opcode::kAlu), kOpcodeBits);
                   uint32_t op = static_cast<uint32_t>(a.alu_opcode);
                   VisitAlu(a, op, enc);
                 },
                 [&](const FinishInstr& f) {
                   w.Put("opcode", static_cast<uint32_t>(Opcode::kFinish), kOpcodeBits);
                   VisitDeps(f.deps, enc);
                 }},
             instr);
  return w.Bytes();
}

Instruction decode_instruction(std::span<const uint8_t, kInstrBytes> word) {
  BitReader r(word);
  DecodeVisitor dec{r};
  uint32_t opcode = static_cast<uint32_t>(r.Get(kOpcodeBits));
  switch (opcode) {
    case static_cast<uint32_t>(Opcode::kLoad):
    case static_cast<uint32_t>(Opcode::kStore): {
      MemInstr m;
      m.opcode = static_cast<Opcode>(opcode);
      uint32_t buffer = 0;
      VisitMem(m, buffer, dec);
      if (buffer > static_cast<uint32_t>(BufferId::kOut)) {
        throw Error(ErrorKind::kDecode, fmt::format("unknown buffer id {}", buffer));
      }
      m.buffer = static_cast<BufferId>(buffer);
      return m;
    }
    case static_cast<uint32_t>(Opcode::kGemm): {
      GemmInstr g;
      VisitGemm(g, dec);
      return g;
    }
    case static_cast<uint32_t>(Opcode::kAlu): {
      AluInstr a;
      uint32_t op = 0;
      VisitAlu(a, op, dec);
      a.alu_opcode = static_cast<AluOp>(op);
      return a;
    }
    case static_cast<uint32_t>(Opcode::kFinish): {
      FinishInstr f;
      VisitDeps(f.deps, dec);
      return f;
    }
    default:
      throw Error(ErrorKind::kDecode, fmt::format("unknown opcode {}", opcode));
  }
}

uint32_t encode_uop(const Uop& uop) {
  if (uop.acc_idx >> kUopAccBits) {
    throw Error(ErrorKind::kEncoding, fmt::format("uop acc_idx {} overflows {} bits", uop.acc_idx, kUopAccBits));
  }
  if (uop.inp_idx >> kUopInpBits) {
    throw Error(ErrorKind::kEncoding, fmt::format("uop inp_idx {} overflows {} bits", uop.inp_idx, kUopInpBits));
  }
  if (uop.wgt_idx >> kUopWgtBits) {
    throw Error(ErrorKind::kEncoding, fmt::format("uop wgt_idx {} overflows {} bits", uop.wgt_idx, kUopWgtBits));
  }
  return uop.acc_idx | (uop.inp_idx << kUopAccBits) | (uop.wgt_idx << (kUopAccBits + kUopInpBits));
}

Uop decode_uop(uint32_t word) {
  Uop u;
  u.acc_idx = word & ((1u << kUopAccBits) - 1);
  u.inp_idx = (word >> kUopAccBits) & ((1u << kUopInpBits) - 1);
  u.wgt_idx = (word >> (kUopAccBits + kUopInpBits)) & ((1u << kUopWgtBits) - 1);
  return u;
}

std::vector<uint8_t> encode_program(std::span<const Instruction> instrs) {
  std::vector<uint8_t> out;
  out.reserve(instrs.size() * kInstrBytes);
  for (const auto& instr : instrs) {
    InstrWord w = encode_instruction(instr);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

std::vector<uint8_t> encode_uops(std::span<const Uop> uops) {
  std::vector<uint8_t> out;
  out.reserve(uops.size() * kUopBytes);
  for (const auto& u : uops) {
    uint32_t w = encode_uop(u);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(w >> (8 * i)));
  }
  return out;
}

std::vector<Instruction> decode_program(std::span<const uint8_t> bytes) {
  if (bytes.size() % kInstrBytes != 0) {
    size_t offset = bytes.size() - bytes.size() % kInstrBytes;
    throw Error(ErrorKind::kDecode,
                fmt::format("truncated instruction at offset {} ({} trailing bytes)", offset,
                            bytes.size() % kInstrBytes));
  }
  std::vector<Instruction> out;
  out.reserve(bytes.size() / kInstrBytes);
  for (size_t off = 0; off < bytes.size(); off += kInstrBytes) {
    try {
      out.push_back(decode_instruction(bytes.subspan(off).first<kInstrBytes>()));
    } catch (const Error& e) {
      throw Error(ErrorKind::kDecode, fmt::format("{} at offset {}", e.what(), off));
    }
  }
  return out;
}

std::vector<Uop> decode_uops(std::span<const uint8_t> bytes) {
  if (bytes.size() % kUopBytes != 0) {
    size_t offset = bytes.size() - bytes.size() % kUopBytes;
    throw Error(ErrorKind::kDecode, fmt::format("truncated micro-op at offset {}", offset));
  }
  std::vector<Uop> out;
  out.reserve(bytes.size() / kUopBytes);
  for (size_t off = 0; off < bytes.size(); off += kUopBytes) {
    uint32_t w = bytes[off] | (bytes[off + 1] << 8) | (bytes[off + 2] << 16) |
                 (static_cast<uint32_t>(bytes[off + 3]) << 24);
    out.push_back(decode_uop(w));
  }
  return out;
}

std::string format_instruction(const Instruction& instr) {
  return std::visit(
      Overloaded{
          [](const MemInstr& m) {
            return fmt::format(
                "{} buf={} sram={} dram={} y_size={} x_size={} x_stride={} pad=({},{},{},{}) {}",
                m.opcode == Opcode::kLoad ? "LOAD" : "STORE", BufferName(m.buffer), m.sram_base,
                Hex(m.dram_base), m.y_size, m.x_size, m.x_stride, m.y_pad_top, m.y_pad_bottom,
                m.x_pad_left, m.x_pad_right, FormatDeps(m.deps));
          },
          [](const GemmInstr& g) {
            return fmt::format(
                "GEMM lp_out={} lp_in={} uop=[{},{}) reset={} acc=({},{}) inp=({},{}) wgt=({},{}) {}",
                g.lp_out, g.lp_in, g.uop_begin, g.uop_end, g.reset ? 1 : 0, g.acc_factor_out,
                g.acc_factor_in, g.inp_factor_out, g.inp_factor_in, g.wgt_factor_out,
                g.wgt_factor_in, FormatDeps(g.deps));
          },
          [](const AluInstr& a) {
            std::string operand = a.use_imm ? fmt::format("imm={}", a.imm) : std::string("src=acc");
            return fmt::format(
                "ALU {} {} lp_out={} lp_in={} uop=[{},{}) reset={} dst=({},{}) src=({},{}) {}",
                AluOpName(a.alu_opcode), operand, a.lp_out, a.lp_in, a.uop_begin, a.uop_end,
                a.reset ? 1 : 0, a.dst_factor_out, a.dst_factor_in, a.src_factor_out,
                a.src_factor_in, FormatDeps(a.deps));
          },
          [](const FinishInstr& f) { return fmt::format("FINISH {}", FormatDeps(f.deps)); }},
      instr);
}

std::string format_uop(const Uop& u) {
  return fmt::format("acc={} inp={} wgt={}", u.acc_idx, u.inp_idx, u.wgt_idx);
}

std::string disassemble(std::span<const uint8_t> instr_bytes, std::span<const uint8_t> uop_bytes,
                        const DisasmOptions& options) {
  std::vector<Instruction> program = decode_program(instr_bytes);
  std::vector<Uop> uops = decode_uops(uop_bytes);

  uint32_t base = 0;
  if (options.uop_log_base) {
    base = *options.uop_log_base;
  } else {
    bool found = false;
    for (const auto& instr : program) {
      if (const auto* m = std::get_if<MemInstr>(&instr);
          m && m->opcode == Opcode::kLoad && m->buffer == BufferId::kUop) {
        base = found ? std::min(base, m->dram_base) : m->dram_base;
        found = true;
      }
    }
  }

  // Micro-op SRAM contents as established by the loads seen so far.
  std::map<uint32_t, std::optional<Uop>> slots;
  std::ostringstream os;
  for (size_t i = 0; i < program.size(); ++i) {
    const Instruction& instr = program[i];
    os << fmt::format("{:04x}: {}\n", i * kInstrBytes, format_instruction(instr));
    if (const auto* m = std::get_if<MemInstr>(&instr);
        m && m->opcode == Opcode::kLoad && m->buffer == BufferId::kUop) {
      for (uint32_t y = 0; y < m->y_size; ++y) {
        for (uint32_t x = 0; x < m->x_size; ++x) {
          uint64_t src = static_cast<uint64_t>(m->dram_base) + y * m->x_stride + x;
          uint32_t slot = m->sram_base + y * m->x_size + x;
          if (src >= base && src - base < uops.size()) {
            slots[slot] = uops[src - base];
          } else {
            slots[slot] = std::nullopt;
          }
        }
      }
      continue;
    }
    uint32_t begin = 0, end = 0;
    if (const auto* g = std::get_if<GemmInstr>(&instr)) {
      begin = g->uop_begin;
      end = g->uop_end;
    } else if (const auto* a = std::get_if<AluInstr>(&instr)) {
      begin = a->uop_begin;
      end = a->uop_end;
    }
    for (uint32_t s = begin; s < end; ++s) {
      auto it = slots.find(s);
      if (it == slots.end() || !it->second) {
        os << fmt::format("      uop[{}] <unresolved>\n", s);
      } else {
        os << fmt::format("      uop[{}] {}\n", s, format_uop(*it->second));
      }
    }
  }
  if (!uops.empty()) {
    os << fmt::format("; uop stream: {} words\n", uops.size());
    for (size_t i = 0; i < uops.size(); ++i) {
      os << fmt::format(";   [{}] {}\n", i, format_uop(uops[i]));
    }
  }
  return os.str();
}

}  // namespace isa
}  // namespace vta
