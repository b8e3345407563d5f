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

#include "vta/progbuild.h"

#include <fmt/format.h>

#include <algorithm>

#include "vta/error.h"

namespace vta {
namespace prog {

using isa::BufferId;

namespace {

void RequireFits(uint64_t value, uint64_t bound, const char* what) {
  if (value > bound) {
    throw Error(ErrorKind::kCapacity, fmt::format("{} needs {} but the limit is {}", what, value, bound));
  }
}

constexpr uint32_t FieldMax(uint32_t bits) { return (1u << bits) - 1; }

}  // namespace

GemmGen gen_gemm(uint32_t alpha, uint32_t lambda, uint32_t beta, uint32_t epsilon, const VtaConfig& cfg) {
  const uint32_t bs = cfg.block_size;
  RequireFits(uint64_t{alpha} * lambda * bs, cfg.inp_buf_depth, "INP buffer (alpha*lambda*block_size vectors)");
  RequireFits(uint64_t{lambda} * beta, cfg.wgt_buf_depth, "WGT buffer (lambda*beta matrices)");
  RequireFits(uint64_t{alpha} * beta * bs, cfg.acc_buf_depth, "ACC buffer (alpha*beta*block_size vectors)");
  RequireFits(uint64_t{epsilon} + uint64_t{alpha} * beta, cfg.uop_buf_depth, "UOP buffer (epsilon+alpha*beta)");
  RequireFits(lambda, FieldMax(isa::kLoopIterBits), "lp_out field (lambda)");
  RequireFits(beta, FieldMax(isa::kWgtFactorBits), "wgt_factor_out field (beta)");

  GemmGen g;
  g.instr.uop_begin = epsilon;
  g.instr.uop_end = epsilon + alpha * beta;
  g.instr.lp_out = lambda;
  g.instr.lp_in = bs;
  g.instr.acc_factor_out = 0;
  g.instr.acc_factor_in = 1;
  g.instr.inp_factor_out = bs;
  g.instr.inp_factor_in = 1;
  g.instr.wgt_factor_out = beta;
  g.instr.wgt_factor_in = 0;
  g.uops.reserve(size_t{alpha} * beta);
  for (uint32_t i = 0; i < alpha; ++i) {
    for (uint32_t j = 0; j < beta; ++j) {
      g.uops.push_back({(i * beta + j) * bs, i * lambda * bs, j});
    }
  }
  return g;
}

AluGen gen_alu(const AluStep& step, uint32_t vector_count, uint32_t slot, const VtaConfig& cfg) {
  RequireFits(vector_count, cfg.acc_buf_depth, "ALU vector count");
  RequireFits(uint64_t{slot} + 1, cfg.uop_buf_depth, "UOP buffer (ALU slot)");
  AluGen a;
  a.instr.uop_begin = slot;
  a.instr.uop_end = slot + 1;
  a.instr.lp_out = 1;
  a.instr.lp_in = vector_count;
  a.instr.dst_factor_out = 0;
  a.instr.dst_factor_in = 1;
  a.instr.src_factor_out = 0;
  a.instr.src_factor_in = 1;
  a.instr.alu_opcode = step.op;
  a.instr.use_imm = step.imm.has_value();
  a.instr.imm = step.imm.value_or(0);
  a.uops.push_back({0, 0, 0});
  return a;
}

ResetGen gen_reset(uint32_t vector_count, uint32_t uop_dram, const VtaConfig& cfg) {
  RequireFits(vector_count, cfg.acc_buf_depth, "reset vector count");
  ResetGen r;
  r.uop_load = gen_load(BufferId::kUop, 0, uop_dram, 1, 1, 1);
  r.reset.reset = true;
  r.reset.uop_begin = 0;
  r.reset.uop_end = 1;
  r.reset.lp_out = 1;
  r.reset.lp_in = vector_count;
  r.reset.acc_factor_in = 1;
  return r;
}

isa::MemInstr gen_load(BufferId buffer, uint32_t sram, uint32_t dram, uint32_t y, uint32_t x, uint32_t stride) {
  isa::MemInstr m;
  m.opcode = isa::Opcode::kLoad;
  m.buffer = buffer;
  m.sram_base = sram;
  m.dram_base = dram;
  if (x == stride && uint64_t{x} * y <= FieldMax(isa::kSizeBits)) {
    x *= y;
    stride = x;
    y = 1;
  }
  RequireFits(x, FieldMax(isa::kSizeBits), "x_size field");
  RequireFits(y, FieldMax(isa::kSizeBits), "y_size field");
  RequireFits(stride, FieldMax(isa::kStrideBits), "x_stride field");
  m.y_size = y;
  m.x_size = x;
  m.x_stride = stride;
  return m;
}

isa::MemInstr gen_store(uint32_t sram, uint32_t dram, uint32_t y, uint32_t x, uint32_t stride) {
  isa::MemInstr m = gen_load(BufferId::kOut, sram, dram, y, x, stride);
  m.opcode = isa::Opcode::kStore;
  return m;
}

isa::FinishInstr gen_finish() { return {}; }

std::vector<Tile> tile(uint32_t alpha, uint32_t lambda, uint32_t beta, const VtaConfig& cfg, uint32_t epsilon) {
  const uint32_t bs = cfg.block_size;
  const uint32_t acc_vecs = std::min(cfg.acc_buf_depth, cfg.out_buf_depth);
  // Slots: epsilon reserved below, plus one zero micro-op for the ALU.
  const uint32_t uop_room = cfg.uop_buf_depth > epsilon + 1 ? cfg.uop_buf_depth - epsilon - 1 : 0;

  uint32_t bt = std::min({beta, FieldMax(isa::kWgtFactorBits), cfg.wgt_buf_depth, acc_vecs / bs, uop_room});
  uint32_t lt = std::min({lambda, cfg.wgt_buf_depth / std::max(bt, 1u), cfg.inp_buf_depth / bs,
                          FieldMax(isa::kLoopIterBits)});
  uint32_t at = std::min({alpha, cfg.inp_buf_depth / (std::max(lt, 1u) * bs), acc_vecs / (std::max(bt, 1u) * bs),
                          uop_room / std::max(bt, 1u)});
  if (bt == 0 || lt == 0 || at == 0) {
    throw Error(ErrorKind::kInternal, "a single block does not fit the on-chip buffers");
  }

  std::vector<Tile> tiles;
  for (uint32_t i0 = 0; i0 < alpha; i0 += at) {
    for (uint32_t j0 = 0; j0 < beta; j0 += bt) {
      for (uint32_t k0 = 0; k0 < lambda; k0 += lt) {
        tiles.push_back({i0, std::min(at, alpha - i0), j0, std::min(bt, beta - j0), k0, std::min(lt, lambda - k0)});
      }
    }
  }
  return tiles;
}

void validate_job(const MatMulJob& job, const VtaConfig& cfg) {
  validate(cfg);
  auto check_block = [&](const blocks::BlockMatrix& m, blocks::Kind kind, const char* name) {
    if (m.kind != kind) throw Error(ErrorKind::kShape, fmt::format("operand {} has the wrong kind", name));
    if (m.block_size != cfg.block_size) {
      throw Error(ErrorKind::kShape, fmt::format("operand {} uses block size {}, config has {}", name,
                                                 m.block_size, cfg.block_size));
    }
    if (m.grid_rows == 0 || m.grid_cols == 0) throw Error(ErrorKind::kShape, fmt::format("operand {} is empty", name));
  };
  check_block(job.a, blocks::Kind::kInp, "A");
  check_block(job.b, blocks::Kind::kWgt, "B");
  if (job.a.grid_cols != job.b.grid_rows) {
    throw Error(ErrorKind::kShape, fmt::format("A is {}x{} blocks but B is {}x{}", job.a.grid_rows, job.a.grid_cols,
                                               job.b.grid_rows, job.b.grid_cols));
  }
  if (job.x) {
    check_block(*job.x, blocks::Kind::kAcc, "X");
    if (job.x->grid_rows != job.alpha() || job.x->grid_cols != job.beta()) {
      throw Error(ErrorKind::kShape, fmt::format("X is {}x{} blocks, expected {}x{}", job.x->grid_rows,
                                                 job.x->grid_cols, job.alpha(), job.beta()));
    }
  }
  if (job.uop_epsilon == 0) throw Error(ErrorKind::kShape, "uop_epsilon must be at least 1");
}

Program build_program(const MatMulJob& job, const VtaConfig& cfg, const Layout& layout) {
  validate_job(job, cfg);
  const uint32_t bs = cfg.block_size;
  const uint32_t alpha = job.alpha(), lambda = job.lambda(), beta = job.beta();
  const uint32_t eps = job.uop_epsilon;
  const uint64_t inp_vec = cfg.inp_vector_bytes(), acc_vec = cfg.acc_vector_bytes();
  const uint64_t out_vec = cfg.out_vector_bytes(), wgt_mat = cfg.wgt_matrix_bytes();

  Program p;
  p.layout = layout;
  p.tiles = tile(alpha, lambda, beta, cfg, eps);
  auto& ins = p.instructions;
  auto& st = p.predicted;

  // Dependency tokens for a strictly sequential schedule. Compute owns UOP/ACC
  // loads, GEMM, ALU and FINISH; load owns INP/WGT; store owns STORE.
  bool c2l_pending = false;  // compute released the INP/WGT buffers
  bool s2c_pending = false;  // store released the OUT buffer

  p.uops.push_back({0, 0, 0});  // reset micro-op, slot 0
  st.dram_bytes_loaded += isa::kUopBytes;
  bool reset_uop_loaded = false;

  for (size_t t = 0; t < p.tiles.size(); ++t) {
    const Tile& tl = p.tiles[t];
    const bool first_seg = tl.k0 == 0;
    const bool last_seg = tl.k0 + tl.lambda == lambda;
    const uint32_t acc_count = tl.alpha * tl.beta * bs;

    if (first_seg) {
      ResetGen r = gen_reset(acc_count, layout.uop, cfg);
      if (!reset_uop_loaded) {
        if (s2c_pending) {
          r.uop_load.deps.pop_next = true;
          s2c_pending = false;
        }
        ins.push_back(r.uop_load);
        reset_uop_loaded = true;
      }
      if (s2c_pending) {
        r.reset.deps.pop_next = true;
        s2c_pending = false;
      }
      ins.push_back(r.reset);
      st.reset_loop_count += acc_count;
    }

    // Load phase.
    isa::MemInstr ld_inp = gen_load(BufferId::kInp, 0, layout.inp + (tl.i0 * lambda + tl.k0) * bs, tl.alpha,
                                    tl.lambda * bs, lambda * bs);
    isa::MemInstr ld_wgt =
        gen_load(BufferId::kWgt, 0, layout.wgt + tl.k0 * beta + tl.j0, tl.lambda, tl.beta, beta);
    if (c2l_pending) {
      ld_inp.deps.pop_next = true;
      c2l_pending = false;
    }
    ld_wgt.deps.push_next = true;
    ins.push_back(ld_inp);
    ins.push_back(ld_wgt);
    st.dram_bytes_loaded += uint64_t{tl.alpha} * tl.lambda * bs * inp_vec;
    st.dram_bytes_loaded += uint64_t{tl.lambda} * tl.beta * wgt_mat;

    if (first_seg && job.x) {
      ins.push_back(gen_load(BufferId::kAcc, 0, layout.acc + (tl.i0 * beta + tl.j0) * bs, tl.alpha, tl.beta * bs,
                             beta * bs));
      st.dram_bytes_loaded += uint64_t{acc_count} * acc_vec;
    }

    // Micro-ops for this GEMM, followed by the ALU's zero micro-op on the last segment.
    GemmGen g = gen_gemm(tl.alpha, tl.lambda, tl.beta, eps, cfg);
    const bool with_alu = last_seg && !job.alu.empty();
    const uint32_t uop_dram = layout.uop + static_cast<uint32_t>(p.uops.size());
    p.uops.insert(p.uops.end(), g.uops.begin(), g.uops.end());
    if (with_alu) p.uops.push_back({0, 0, 0});
    const uint32_t uop_count = static_cast<uint32_t>(g.uops.size()) + (with_alu ? 1 : 0);
    ins.push_back(gen_load(BufferId::kUop, eps, uop_dram, 1, uop_count, uop_count));
    st.dram_bytes_loaded += uint64_t{uop_count} * isa::kUopBytes;

    g.instr.deps.pop_prev = true;
    if (t + 1 < p.tiles.size()) {
      g.instr.deps.push_prev = true;
      c2l_pending = true;
    }
    ins.push_back(g.instr);
    st.gemm_loop_count += uint64_t{tl.lambda} * bs * tl.alpha * tl.beta;

    if (!last_seg) continue;

    for (const AluStep& step : job.alu) {
      AluGen a = gen_alu(step, acc_count, eps + tl.alpha * tl.beta, cfg);
      ins.push_back(a.instr);
      st.alu_loop_count += acc_count;
    }
    isa::DepFlags& before_store = isa::DepsOf(ins.back());
    before_store.push_next = true;

    isa::MemInstr store =
        gen_store(0, layout.out + (tl.i0 * beta + tl.j0) * bs, tl.alpha, tl.beta * bs, beta * bs);
    store.deps.pop_prev = true;
    store.deps.push_prev = true;
    s2c_pending = true;
    ins.push_back(store);
    st.dram_bytes_stored += uint64_t{acc_count} * out_vec;
  }

  isa::FinishInstr fin = gen_finish();
  if (s2c_pending) fin.deps.pop_next = true;
  ins.push_back(fin);
  return p;
}

void relocate(Program& program, const Layout& to) {
  const Layout& from = program.layout;
  auto shift = [](uint32_t v, uint32_t a, uint32_t b) { return v - a + b; };
  for (auto& instr : program.instructions) {
    auto* m = std::get_if<isa::MemInstr>(&instr);
    if (!m) continue;
    switch (m->buffer) {
      case BufferId::kUop:
        m->dram_base = shift(m->dram_base, from.uop, to.uop);
        break;
      case BufferId::kInp:
        m->dram_base = shift(m->dram_base, from.inp, to.inp);
        break;
      case BufferId::kWgt:
        m->dram_base = shift(m->dram_base, from.wgt, to.wgt);
        break;
      case BufferId::kAcc:
        m->dram_base = shift(m->dram_base, from.acc, to.acc);
        break;
      case BufferId::kOut:
        m->dram_base = shift(m->dram_base, from.out, to.out);
        break;
    }
  }
  program.layout = to;
}

PredictedStats analytic_loop_counts(const std::vector<isa::Instruction>& instrs) {
  PredictedStats s;
  for (const auto& instr : instrs) {
    if (const auto* g = std::get_if<isa::GemmInstr>(&instr)) {
      uint64_t n = uint64_t{g->lp_out} * g->lp_in * (g->uop_end > g->uop_begin ? g->uop_end - g->uop_begin : 0);
      (g->reset ? s.reset_loop_count : s.gemm_loop_count) += n;
    } else if (const auto* a = std::get_if<isa::AluInstr>(&instr)) {
      s.alu_loop_count += uint64_t{a->lp_out} * a->lp_in * (a->uop_end > a->uop_begin ? a->uop_end - a->uop_begin : 0);
    }
  }
  return s;
}

CompiledJob compile_matmul(const MatMulJob& job, dram::DramImage& img, const std::optional<dram::Region>& inp_region) {
  const VtaConfig& cfg = img.config();
  CompiledJob c;
  // Build once at zero to learn the micro-op and instruction counts.
  c.program = build_program(job, cfg);
  const uint64_t bs = cfg.block_size;
  const uint64_t out_bytes = uint64_t{job.alpha()} * job.beta() * bs * cfg.out_vector_bytes();

  c.inp_bytes = blocks::binarise(job.a);
  c.wgt_bytes = blocks::binarise(job.b);
  if (job.x) c.acc_bytes = blocks::binarise(*job.x);

  if (inp_region) {
    if (inp_region->kind != dram::RegionKind::kInp && inp_region->kind != dram::RegionKind::kOut) {
      throw Error(ErrorKind::kAddress, "shared input region must hold 8-bit vectors");
    }
    if (inp_region->size_bytes != c.inp_bytes.size()) {
      throw Error(ErrorKind::kShape, fmt::format("shared input region holds {} bytes, job needs {}",
                                                 inp_region->size_bytes, c.inp_bytes.size()));
    }
    c.regions.inp = *inp_region;
  } else {
    c.regions.inp = img.allocate(c.inp_bytes.size(), dram::RegionKind::kInp);
  }
  c.regions.wgt = img.allocate(c.wgt_bytes.size(), dram::RegionKind::kWgt);
  if (job.x) c.regions.acc = img.allocate(c.acc_bytes.size(), dram::RegionKind::kAcc);
  c.regions.out = img.allocate(out_bytes, dram::RegionKind::kOut);
  c.regions.uop = img.allocate(c.program.uops.size() * isa::kUopBytes, dram::RegionKind::kUop);
  c.regions.instr = img.allocate(c.program.instructions.size() * isa::kInstrBytes, dram::RegionKind::kInstr);

  auto log32 = [](const dram::Region& r) {
    if (r.log_start > UINT32_MAX) throw Error(ErrorKind::kAddress, "logical address exceeds 32 bits");
    return static_cast<uint32_t>(r.log_start);
  };
  Layout to;
  // An aliased OUT region has the same vector size, so its logical address is valid for INP.
  to.inp = log32(c.regions.inp);
  to.wgt = log32(c.regions.wgt);
  to.acc = c.regions.acc ? log32(*c.regions.acc) : 0;
  to.out = log32(c.regions.out);
  to.uop = log32(c.regions.uop);
  relocate(c.program, to);

  c.instr_bytes = isa::encode_program(c.program.instructions);
  c.uop_bytes = isa::encode_uops(c.program.uops);
  if (!inp_region) img.write_region(c.regions.inp, c.inp_bytes);
  img.write_region(c.regions.wgt, c.wgt_bytes);
  if (job.x) img.write_region(*c.regions.acc, c.acc_bytes);
  img.write_region(c.regions.uop, c.uop_bytes);
  img.write_region(c.regions.instr, c.instr_bytes);
  return c;
}

}  // namespace prog
}  // namespace vta
