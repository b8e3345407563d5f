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

#include <doctest.h>

#include <random>
#include <set>

#include "job_util.h"
#include "vta/error.h"
#include "vta/progbuild.h"

using vta::VtaConfig;
using vta::isa::AluOp;
using vta::isa::BufferId;
using vta::isa::GemmInstr;
using vta::isa::MemInstr;
using vta::isa::Uop;
using vta::prog::AluStep;

namespace {

VtaConfig Bs(uint32_t bs) {
  VtaConfig cfg;
  cfg.block_size = bs;
  return cfg;
}

// Block products C[i][j] += A[i][k] * B[k][j] enumerated straight from the block-matrix sum,
// paired with the micro-op and loop coordinates that must realize them.
struct Access {
  uint32_t acc, inp, wgt;
  auto operator<=>(const Access&) const = default;
};

std::set<Access> OracleAccesses(uint32_t alpha, uint32_t lambda, uint32_t beta, uint32_t bs) {
  std::set<Access> s;
  for (uint32_t i = 0; i < alpha; ++i)
    for (uint32_t j = 0; j < beta; ++j)
      for (uint32_t k = 0; k < lambda; ++k)
        for (uint32_t r = 0; r < bs; ++r) s.insert({(i * beta + j) * bs + r, (i * lambda + k) * bs + r, k * beta + j});
  return s;
}

std::set<Access> GemmAccesses(const GemmInstr& g, const std::vector<Uop>& uops, uint32_t eps) {
  std::set<Access> s;
  for (uint32_t o = 0; o < g.lp_out; ++o)
    for (uint32_t n = 0; n < g.lp_in; ++n)
      for (uint32_t u = g.uop_begin; u < g.uop_end; ++u) {
        const Uop& uop = uops[u - eps];
        s.insert({o * g.acc_factor_out + n * g.acc_factor_in + uop.acc_idx,
                  o * g.inp_factor_out + n * g.inp_factor_in + uop.inp_idx,
                  o * g.wgt_factor_out + n * g.wgt_factor_in + uop.wgt_idx});
      }
  return s;
}

}  // namespace

TEST_CASE("gen_gemm for a single block") {
  auto g = vta::prog::gen_gemm(1, 1, 1, 1, Bs(16));
  CHECK(g.instr.lp_out == 1);
  CHECK(g.instr.lp_in == 16);
  CHECK(g.instr.uop_begin == 1);
  CHECK(g.instr.uop_end == 2);
  REQUIRE(g.uops.size() == 1);
  CHECK(g.uops[0] == Uop{0, 0, 0});
  CHECK(vta::isa::encode_uop(g.uops[0]) == 0);
}

TEST_CASE("gen_gemm micro-ops for a 2x1 grid") {
  auto g = vta::prog::gen_gemm(2, 1, 1, 1, Bs(2));
  REQUIRE(g.uops.size() == 2);
  CHECK(g.uops[0] == Uop{0, 0, 0});
  CHECK(g.uops[1] == Uop{2, 2, 0});
}

TEST_CASE("gen_gemm touches exactly the block-product index triples") {
  for (uint32_t bs : {2u, 4u})
    for (uint32_t a = 1; a <= 4; ++a)
      for (uint32_t l = 1; l <= 4; ++l)
        for (uint32_t b = 1; b <= 4; ++b) {
          auto g = vta::prog::gen_gemm(a, l, b, 3, Bs(bs));
          REQUIRE(GemmAccesses(g.instr, g.uops, 3) == OracleAccesses(a, l, b, bs));
        }
}

TEST_CASE("gen_gemm capacity errors name the bound") {
  try {
    vta::prog::gen_gemm(129, 1, 1, 1, Bs(16));
    FAIL("expected capacity error");
  } catch (const vta::Error& e) {
    CHECK(e.kind() == vta::ErrorKind::kCapacity);
    CHECK(std::string(e.what()).find("INP buffer") != std::string::npos);
  }
  CHECK_THROWS_WITH_AS(vta::prog::gen_gemm(1, 33, 32, 1, Bs(16)), doctest::Contains("WGT buffer"), vta::Error);
  CHECK_THROWS_WITH_AS(vta::prog::gen_gemm(12, 1, 11, 1, Bs(16)), doctest::Contains("ACC buffer"), vta::Error);
}

TEST_CASE("gen_alu and gen_reset") {
  auto relu = vta::prog::gen_alu({AluOp::kMax, 0}, 16, 2, Bs(16));
  CHECK(relu.instr.alu_opcode == AluOp::kMax);
  CHECK(relu.instr.use_imm);
  CHECK(relu.instr.imm == 0);
  CHECK(relu.instr.lp_out == 1);
  CHECK(relu.instr.lp_in == 16);
  CHECK(relu.instr.uop_begin == 2);
  CHECK(relu.instr.uop_end == 3);
  CHECK(relu.instr.dst_factor_in == 1);
  CHECK(relu.instr.src_factor_in == 1);
  CHECK(relu.uops == std::vector<Uop>{{0, 0, 0}});

  auto self = vta::prog::gen_alu({AluOp::kAdd, std::nullopt}, 4, 1, Bs(16));
  CHECK_FALSE(self.instr.use_imm);

  auto r = vta::prog::gen_reset(16, 0x40, Bs(16));
  CHECK(r.uop_load.buffer == BufferId::kUop);
  CHECK(r.uop_load.dram_base == 0x40);
  CHECK(r.uop_load.x_size == 1);
  CHECK(r.reset.reset);
  CHECK(r.reset.lp_in == 16);
  CHECK(r.reset.uop_begin == 0);
  CHECK(r.reset.uop_end == 1);
  CHECK(vta::prog::gen_reset(0, 0, Bs(16)).reset.lp_in == 0);
}

TEST_CASE("contiguous loads collapse to one row") {
  MemInstr m = vta::prog::gen_load(BufferId::kInp, 0, 0x100, 1, 16, 16);
  CHECK(m.y_size == 1);
  CHECK(m.x_size == 16);
  CHECK(m.x_stride == 16);
  MemInstr two = vta::prog::gen_load(BufferId::kInp, 0, 0, 3, 4, 4);
  CHECK(two.y_size == 1);
  CHECK(two.x_size == 12);
  MemInstr strided = vta::prog::gen_load(BufferId::kWgt, 0, 0, 3, 2, 5);
  CHECK(strided.y_size == 3);
  CHECK(strided.x_size == 2);
  CHECK(strided.x_stride == 5);
}

TEST_CASE("tiling") {
  VtaConfig cfg;
  CHECK(vta::prog::tile(49, 2, 1, cfg).size() == 1);
  CHECK(vta::prog::tile(200, 1, 1, cfg).size() >= 2);
  CHECK(vta::prog::tile(129, 1, 1, cfg).size() == 2);
  CHECK(vta::prog::tile(1, 33, 32, cfg).size() == 2);
  CHECK(vta::prog::tile(12, 1, 11, cfg).size() == 2);

  std::mt19937_64 rng(4);
  for (int t = 0; t < 300; ++t) {
    uint32_t a = 1 + rng() % 300, l = 1 + rng() % 80, b = 1 + rng() % 80;
    auto tiles = vta::prog::tile(a, l, b, cfg);
    uint64_t covered = 0;
    for (const auto& tl : tiles) {
      REQUIRE(tl.alpha * tl.lambda * cfg.block_size <= cfg.inp_buf_depth);
      REQUIRE(tl.lambda * tl.beta <= cfg.wgt_buf_depth);
      REQUIRE(tl.alpha * tl.beta * cfg.block_size <= cfg.acc_buf_depth);
      covered += uint64_t{tl.alpha} * tl.lambda * tl.beta;
    }
    REQUIRE(covered == uint64_t{a} * l * b);
  }
}

TEST_CASE("worked 16x16 program") {
  VtaConfig cfg;
  std::mt19937_64 rng(1);
  auto a = vta::test::RandomMatrix(rng, 16, 16);
  auto b = vta::test::RandomMatrix(rng, 16, 16);
  vta::prog::MatMulJob job;
  job.a = vta::blocks::to_blocks(a, 16, vta::blocks::Kind::kInp);
  job.b = vta::blocks::to_blocks(b, 16, vta::blocks::Kind::kWgt);
  job.alu = {{AluOp::kMax, 0}};
  vta::dram::DramImage img(cfg);
  auto c = vta::prog::compile_matmul(job, img);
  CHECK(c.regions.inp.log_start == 0x100);
  CHECK(c.regions.wgt.log_start == 0x20);
  CHECK_FALSE(c.regions.acc.has_value());
  CHECK(c.regions.out.log_start == 0x300);
  CHECK(c.regions.uop.log_start == 0x1000);

  const auto& ins = c.program.instructions;
  REQUIRE(ins.size() == 9);
  auto mem = [&](size_t i) { return std::get<MemInstr>(ins[i]); };
  CHECK(mem(0).buffer == BufferId::kUop);
  CHECK(mem(0).sram_base == 0);
  CHECK(std::get<GemmInstr>(ins[1]).reset);
  CHECK(mem(2).buffer == BufferId::kInp);
  CHECK(mem(2).dram_base == 0x100);
  CHECK(mem(2).x_size == 16);
  CHECK(mem(3).buffer == BufferId::kWgt);
  CHECK(mem(3).dram_base == 0x20);
  CHECK(mem(3).x_size == 1);
  CHECK(mem(4).buffer == BufferId::kUop);
  CHECK(mem(4).sram_base == 1);
  const auto& g = std::get<GemmInstr>(ins[5]);
  CHECK(g.lp_out == 1);
  CHECK(g.lp_in == 16);
  CHECK(g.uop_begin == 1);
  CHECK(g.uop_end == 2);
  CHECK(std::get<vta::isa::AluInstr>(ins[6]).alu_opcode == AluOp::kMax);
  CHECK(mem(7).opcode == vta::isa::Opcode::kStore);
  CHECK(mem(7).dram_base == 0x300);
  CHECK(std::holds_alternative<vta::isa::FinishInstr>(ins[8]));
  CHECK(c.program.uops == std::vector<Uop>{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}});

  std::string listing = vta::isa::disassemble(c.instr_bytes, c.uop_bytes, {0x1000});
  CHECK(listing.find("GEMM lp_out=1 lp_in=16 uop=[1,2)") != std::string::npos);
}

TEST_CASE("an empty post-op list emits no ALU instruction") {
  VtaConfig cfg = Bs(4);
  std::mt19937_64 rng(2);
  vta::prog::MatMulJob job;
  job.a = vta::blocks::to_blocks(vta::test::RandomMatrix(rng, 4, 4), 4, vta::blocks::Kind::kInp);
  job.b = vta::blocks::to_blocks(vta::test::RandomMatrix(rng, 4, 4), 4, vta::blocks::Kind::kWgt);
  auto p = vta::prog::build_program(job, cfg);
  for (const auto& i : p.instructions) CHECK_FALSE(std::holds_alternative<vta::isa::AluInstr>(i));
}

TEST_CASE("job shape validation") {
  VtaConfig cfg = Bs(4);
  vta::prog::MatMulJob job;
  job.a = vta::blocks::to_blocks(vta::blocks::Matrix(4, 8), 4, vta::blocks::Kind::kInp);
  job.b = vta::blocks::to_blocks(vta::blocks::Matrix(4, 4), 4, vta::blocks::Kind::kWgt);
  CHECK_THROWS_AS(vta::prog::build_program(job, cfg), vta::Error);
}

TEST_CASE("exhaustive small grids match the oracle") {
  std::mt19937_64 rng(77);
  for (uint32_t bs : {2u, 4u})
    for (uint32_t a = 1; a <= 4; ++a)
      for (uint32_t l = 1; l <= 4; ++l)
        for (uint32_t b = 1; b <= 4; ++b) {
          VtaConfig cfg = Bs(bs);
          auto ma = vta::test::RandomMatrix(rng, a * bs, l * bs);
          auto mb = vta::test::RandomMatrix(rng, l * bs, b * bs);
          std::optional<vta::blocks::Matrix> x;
          if (rng() & 1) x = vta::test::RandomMatrix(rng, a * bs, b * bs, -100000, 100000);
          auto o = vta::test::RunJob(cfg, ma, mb, x, vta::test::RandomAluOps(rng));
          REQUIRE(o.out == o.expected);
          REQUIRE(o.run.dep_warnings.empty());
          REQUIRE(o.run.stats.gemm_loop_count == o.compiled.program.predicted.gemm_loop_count);
          REQUIRE(o.run.stats.dram_bytes_loaded == o.compiled.program.predicted.dram_bytes_loaded);
          REQUIRE(o.run.stats.dram_bytes_stored == o.compiled.program.predicted.dram_bytes_stored);
        }
}

TEST_CASE("tiled programs match the oracle") {
  // Shrunken buffers force every kind of split on small matrices.
  VtaConfig cfg = Bs(2);
  cfg.inp_buf_depth = 8;
  cfg.wgt_buf_depth = 4;
  cfg.acc_buf_depth = 8;
  cfg.out_buf_depth = 8;
  cfg.uop_buf_depth = 8;
  cfg.page_bytes = 64;
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    uint32_t a = 1 + rng() % 7, l = 1 + rng() % 7, b = 1 + rng() % 7;
    auto ma = vta::test::RandomMatrix(rng, a * 2 - rng() % 2, l * 2 - rng() % 2);
    auto mb = vta::test::RandomMatrix(rng, ma.cols, b * 2 - rng() % 2);
    std::optional<vta::blocks::Matrix> x;
    if (rng() & 1) x = vta::test::RandomMatrix(rng, ma.rows, mb.cols, -1000, 1000);
    auto o = vta::test::RunJob(cfg, ma, mb, x, vta::test::RandomAluOps(rng));
    REQUIRE(o.out == o.expected);
    REQUIRE(o.run.dep_warnings.empty());
  }
}

TEST_CASE("relocation shifts only the matching buffer") {
  VtaConfig cfg = Bs(2);
  std::mt19937_64 rng(6);
  vta::prog::MatMulJob job;
  job.a = vta::blocks::to_blocks(vta::test::RandomMatrix(rng, 4, 4), 2, vta::blocks::Kind::kInp);
  job.b = vta::blocks::to_blocks(vta::test::RandomMatrix(rng, 4, 4), 2, vta::blocks::Kind::kWgt);
  auto p0 = vta::prog::build_program(job, cfg);
  vta::prog::Layout to{10, 20, 30, 40, 50};
  auto p1 = vta::prog::build_program(job, cfg, to);
  vta::prog::relocate(p0, to);
  CHECK(vta::isa::encode_program(p0.instructions) == vta::isa::encode_program(p1.instructions));
}

TEST_CASE("analytic loop counts") {
  VtaConfig cfg = Bs(4);
  std::mt19937_64 rng(8);
  vta::prog::MatMulJob job;
  job.a = vta::blocks::to_blocks(vta::test::RandomMatrix(rng, 12, 8), 4, vta::blocks::Kind::kInp);
  job.b = vta::blocks::to_blocks(vta::test::RandomMatrix(rng, 8, 20), 4, vta::blocks::Kind::kWgt);
  job.alu = {{AluOp::kMax, 0}, {AluOp::kShr, 2}};
  auto p = vta::prog::build_program(job, cfg);
  auto a = vta::prog::analytic_loop_counts(p.instructions);
  CHECK(a.gemm_loop_count == 2 * 4 * 3 * 5);
  CHECK(a.gemm_loop_count == p.predicted.gemm_loop_count);
  CHECK(a.reset_loop_count == 3 * 5 * 4);
  CHECK(a.alu_loop_count == 2 * 3 * 5 * 4);
}
