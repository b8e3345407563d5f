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

#include "vta/tensorfront.h"

#include <fmt/format.h>

#include <bit>

#include "vta/error.h"

namespace vta {
namespace tensor {

std::string Tensor4::shape() const { return fmt::format("({},{},{},{})", n, c, h, w); }

uint32_t conv_out_dim(uint32_t in, uint32_t kernel, uint32_t stride, uint32_t pad) {
  const int64_t padded = int64_t{in} + 2 * int64_t{pad};
  if (stride == 0 || kernel == 0 || kernel > padded) {
    throw Error(ErrorKind::kShape, fmt::format("kernel {} with stride {} does not fit input {} padded by {}",
                                               kernel, stride, in, pad));
  }
  return static_cast<uint32_t>((padded - kernel) / stride + 1);
}

Matrix im2row(const Tensor4& t, uint32_t kh, uint32_t kw, uint32_t stride, uint32_t pad) {
  const uint32_t oh = conv_out_dim(t.h, kh, stride, pad);
  const uint32_t ow = conv_out_dim(t.w, kw, stride, pad);
  Matrix m(oh * ow, t.c * kh * kw);
  for (uint32_t y = 0; y < oh; ++y) {
    for (uint32_t x = 0; x < ow; ++x) {
      const uint32_t row = y * ow + x;
      uint32_t col = 0;
      for (uint32_t c = 0; c < t.c; ++c) {
        for (uint32_t ky = 0; ky < kh; ++ky) {
          for (uint32_t kx = 0; kx < kw; ++kx, ++col) {
            const int64_t iy = int64_t{y} * stride + ky - pad;
            const int64_t ix = int64_t{x} * stride + kx - pad;
            if (iy >= 0 && ix >= 0 && iy < t.h && ix < t.w) {
              m.at(row, col) = t.at(0, c, static_cast<uint32_t>(iy), static_cast<uint32_t>(ix));
            }
          }
        }
      }
    }
  }
  return m;
}

Matrix ker2col(const Tensor4& w) {
  Matrix m(w.c * w.h * w.w, w.n);
  for (uint32_t f = 0; f < w.n; ++f) {
    uint32_t row = 0;
    for (uint32_t c = 0; c < w.c; ++c) {
      for (uint32_t ky = 0; ky < w.h; ++ky) {
        for (uint32_t kx = 0; kx < w.w; ++kx, ++row) m.at(row, f) = w.at(f, c, ky, kx);
      }
    }
  }
  return m;
}

Tensor4 mat2tensor(const Matrix& m, uint32_t c, uint32_t h, uint32_t w) {
  if (m.rows != h * w || m.cols != c) {
    throw Error(ErrorKind::kShape,
                fmt::format("matrix {}x{} cannot become a tensor (1,{},{},{})", m.rows, m.cols, c, h, w));
  }
  Tensor4 t(1, c, h, w);
  for (uint32_t ch = 0; ch < c; ++ch) {
    for (uint32_t y = 0; y < h; ++y) {
      for (uint32_t x = 0; x < w; ++x) t.at(0, ch, y, x) = m.at(y * w + x, ch);
    }
  }
  return t;
}

Matrix tensor2mat(const Tensor4& t) {
  if (t.n != 1) throw Error(ErrorKind::kShape, "only batch size 1 is supported");
  Matrix m(t.h * t.w, t.c);
  for (uint32_t ch = 0; ch < t.c; ++ch) {
    for (uint32_t y = 0; y < t.h; ++y) {
      for (uint32_t x = 0; x < t.w; ++x) m.at(y * t.w + x, ch) = t.at(0, ch, y, x);
    }
  }
  return m;
}

Tensor4 host_pool(const Tensor4& t, const Pooling& pool) {
  if (pool.window == 0 || pool.stride == 0 || pool.window > t.h || pool.window > t.w ||
      (t.h - pool.window) % pool.stride != 0 || (t.w - pool.window) % pool.stride != 0) {
    throw Error(ErrorKind::kShape, fmt::format("pooling window {} stride {} does not tile {}x{}", pool.window,
                                               pool.stride, t.h, t.w));
  }
  const uint32_t area = pool.window * pool.window;
  if (pool.mode == PoolMode::kAvg && !std::has_single_bit(area)) {
    throw Error(ErrorKind::kShape, fmt::format("average pooling needs a power-of-two window area, got {}", area));
  }
  const int shift = std::countr_zero(area);
  const uint32_t oh = (t.h - pool.window) / pool.stride + 1;
  const uint32_t ow = (t.w - pool.window) / pool.stride + 1;
  Tensor4 out(t.n, t.c, oh, ow);
  for (uint32_t n = 0; n < t.n; ++n) {
    for (uint32_t c = 0; c < t.c; ++c) {
      for (uint32_t y = 0; y < oh; ++y) {
        for (uint32_t x = 0; x < ow; ++x) {
          int64_t acc = pool.mode == PoolMode::kMax ? INT64_MIN : 0;
          for (uint32_t dy = 0; dy < pool.window; ++dy) {
            for (uint32_t dx = 0; dx < pool.window; ++dx) {
              int64_t v = t.at(n, c, y * pool.stride + dy, x * pool.stride + dx);
              acc = pool.mode == PoolMode::kMax ? std::max(acc, v) : acc + v;
            }
          }
          out.at(n, c, y, x) = static_cast<int32_t>(pool.mode == PoolMode::kMax ? acc : acc >> shift);
        }
      }
    }
  }
  return out;
}

Tensor4 flatten_for_fc(const Tensor4& t) {
  Tensor4 f(t.n, t.c * t.h * t.w, 1, 1);
  f.data = t.data;
  return f;
}

std::vector<prog::AluStep> layer_alu_ops(const LayerSpec& layer) {
  std::vector<prog::AluStep> ops;
  if (layer.relu) ops.push_back({isa::AluOp::kMax, 0});
  if (layer.requant_shift > 0) ops.push_back({isa::AluOp::kShr, static_cast<int32_t>(layer.requant_shift)});
  ops.push_back({isa::AluOp::kMin, 127});
  ops.push_back({isa::AluOp::kMax, -128});
  return ops;
}

void check_layer(const LayerSpec& layer, const Tensor4& in) {
  const Tensor4& w = layer.weight;
  if (w.data.size() != size_t{w.n} * w.c * w.h * w.w || w.n == 0) {
    throw Error(ErrorKind::kShape, fmt::format("layer {}: malformed weight tensor", layer.name));
  }
  if (layer.kind == LayerKind::kFullyConnected) {
    if (w.h != 1 || w.w != 1 || w.c != in.c * in.h * in.w) {
      throw Error(ErrorKind::kShape, fmt::format("layer {}: fully-connected weight {} does not take input {}",
                                                 layer.name, w.shape(), in.shape()));
    }
  } else if (w.c != in.c) {
    throw Error(ErrorKind::kShape,
                fmt::format("layer {}: weight {} does not match input {}", layer.name, w.shape(), in.shape()));
  }
  if (layer.bias && layer.bias->size() != w.n) {
    throw Error(ErrorKind::kShape, fmt::format("layer {}: bias has {} entries for {} filters", layer.name,
                                               layer.bias->size(), w.n));
  }
  if (layer.requant_shift > 31) throw Error(ErrorKind::kShape, fmt::format("layer {}: requant shift above 31", layer.name));
}

namespace {

struct Geometry {
  Tensor4 in;  // input as seen by im2row
  uint32_t kh, kw, stride, pad;
};

Geometry LayerGeometry(const LayerSpec& layer, const Tensor4& input) {
  if (layer.kind == LayerKind::kFullyConnected) return {flatten_for_fc(input), 1, 1, 1, 0};
  return {input, layer.weight.h, layer.weight.w, layer.stride, layer.pad};
}

}  // namespace

Tensor4 layer_output_dims(const LayerSpec& layer, const Tensor4& in) {
  check_layer(layer, in);
  Geometry g = LayerGeometry(layer, Tensor4(in.n, in.c, in.h, in.w));
  Tensor4 out(1, layer.weight.n, conv_out_dim(g.in.h, g.kh, g.stride, g.pad), conv_out_dim(g.in.w, g.kw, g.stride, g.pad));
  if (layer.pool) out = host_pool(out, *layer.pool);
  return out;
}

CompiledLayer compile_layer(const LayerSpec& layer, const Tensor4& input, const VtaConfig& cfg) {
  check_layer(layer, input);
  if (input.n != 1) throw Error(ErrorKind::kShape, "only batch size 1 is supported");
  Geometry g = LayerGeometry(layer, input);
  CompiledLayer cl;
  cl.a = im2row(g.in, g.kh, g.kw, g.stride, g.pad);
  cl.b = ker2col(layer.weight);
  cl.out_c = layer.weight.n;
  cl.out_h = conv_out_dim(g.in.h, g.kh, g.stride, g.pad);
  cl.out_w = conv_out_dim(g.in.w, g.kw, g.stride, g.pad);
  if (layer.bias) {
    // Bias rides in the accumulator preload, broadcast over the real rows only.
    Matrix x(cl.a.rows, cl.b.cols);
    for (uint32_t r = 0; r < x.rows; ++r) {
      for (uint32_t c = 0; c < x.cols; ++c) x.at(r, c) = (*layer.bias)[c];
    }
    cl.x = std::move(x);
  }
  const uint32_t bs = cfg.block_size;
  cl.job.a = blocks::to_blocks(cl.a, bs, blocks::Kind::kInp);
  cl.job.b = blocks::to_blocks(cl.b, bs, blocks::Kind::kWgt);
  if (cl.x) cl.job.x = blocks::to_blocks(*cl.x, bs, blocks::Kind::kAcc);
  cl.job.alu = layer_alu_ops(layer);
  return cl;
}

std::vector<LayerRun> ChainedNetwork::plan() const {
  std::vector<LayerRun> p;
  for (const auto& l : layers) p.push_back(l.run);
  return p;
}

ChainedNetwork chain_layers(const std::vector<LayerSpec>& layers, const Tensor4& input, dram::DramImage& img) {
  if (layers.empty()) throw Error(ErrorKind::kShape, "network has no layers");
  const VtaConfig& cfg = img.config();
  ChainedNetwork net;
  Tensor4 dims = input;
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& layer = layers[i];
    // Later inputs are unknown until run time; compile against zeros of the right shape.
    Tensor4 in = i == 0 ? input : Tensor4(1, dims.c, dims.h, dims.w);
    ChainedLayer cl;
    cl.compiled = compile_layer(layer, in, cfg);
    LayerRun& run = cl.run;
    run.name = layer.name.empty() ? fmt::format("L{}", i + 1) : layer.name;
    Geometry g = LayerGeometry(layer, in);
    run.in_c = g.in.c;
    run.in_h = g.in.h;
    run.in_w = g.in.w;
    run.kh = g.kh;
    run.kw = g.kw;
    run.stride = g.stride;
    run.pad = g.pad;
    run.out_c = cl.compiled.out_c;
    run.out_h = cl.compiled.out_h;
    run.out_w = cl.compiled.out_w;
    run.out_grid_rows = cl.compiled.job.alpha();
    run.out_grid_cols = cl.compiled.job.beta();
    run.pool = layer.pool;

    std::optional<dram::Region> shared;
    if (i > 0) {
      const ChainedLayer& prev = net.layers.back();
      const LayerRun& pr = prev.run;
      // The previous OUT blocks already are this layer's INP blocks when the
      // previous output is a single unpooled position feeding a 1x1 patch.
      const bool same_blocks = !pr.pool && pr.out_h == 1 && pr.out_w == 1 && g.kh == 1 && g.kw == 1 &&
                               g.pad == 0 && g.in.h == 1 && g.in.w == 1 &&
                               pr.out_grid_rows == cl.compiled.job.a.grid_rows &&
                               pr.out_grid_cols == cl.compiled.job.a.grid_cols;
      if (same_blocks) {
        run.aliased = true;
        shared = prev.job.regions.out;
      } else {
        run.host_reshape = true;
        ++net.reshape_count;
      }
    }
    cl.job = prog::compile_matmul(cl.compiled.job, img, shared);
    run.instr = cl.job.regions.instr;
    run.inp = cl.job.regions.inp;
    run.out = cl.job.regions.out;
    dims = layer_output_dims(layer, dims);
    net.layers.push_back(std::move(cl));
  }
  return net;
}

Tensor4 decode_layer_output(const LayerRun& layer, const dram::DramImage& img, std::vector<HostStep>* steps) {
  const uint32_t bs = img.config().block_size;
  auto note = [&](const char* step, std::string shape) {
    if (steps) steps->push_back({layer.name, step, std::move(shape)});
  };
  auto bytes = img.read_region(layer.out);
  blocks::BlockMatrix bm = blocks::debinarise(bytes, blocks::Kind::kOut, layer.out_grid_rows, layer.out_grid_cols, bs);
  note("debinarise", fmt::format("{}x{} blocks", bm.grid_rows, bm.grid_cols));
  Matrix m = blocks::merge_unpad(bm, layer.out_h * layer.out_w, layer.out_c);
  note("merge_unpad", fmt::format("{}x{}", m.rows, m.cols));
  Tensor4 t = mat2tensor(m, layer.out_c, layer.out_h, layer.out_w);
  if (layer.pool) {
    t = host_pool(t, *layer.pool);
    note("pool", fmt::format("{}x{}", t.h * t.w, t.c));
  }
  note("mat2tensor", t.shape());
  return t;
}

NetworkRun run_network(const std::vector<LayerRun>& plan, dram::DramImage& img, const sim::RunOptions& options) {
  NetworkRun nr;
  const uint32_t bs = img.config().block_size;
  for (size_t i = 0; i < plan.size(); ++i) {
    const LayerRun& layer = plan[i];
    if (layer.host_reshape) {
      if (i == 0) throw Error(ErrorKind::kShape, "first layer cannot take a reshaped input");
      Tensor4 t = decode_layer_output(plan[i - 1], img, &nr.host_steps);
      if (size_t{t.c} * t.h * t.w != size_t{layer.in_c} * layer.in_h * layer.in_w) {
        throw Error(ErrorKind::kShape, fmt::format("layer {} expects {} inputs, previous layer yields {}", layer.name,
                                                   layer.in_c * layer.in_h * layer.in_w, t.shape()));
      }
      // Same NCHW data, viewed with this layer's geometry (flattened for fully connected).
      Tensor4 in(1, layer.in_c, layer.in_h, layer.in_w);
      in.data = t.data;
      Matrix a = im2row(in, layer.kh, layer.kw, layer.stride, layer.pad);
      nr.host_steps.push_back({layer.name, "im2row", fmt::format("{}x{}", a.rows, a.cols)});
      blocks::BlockMatrix bm = blocks::to_blocks(a, bs, blocks::Kind::kInp);
      nr.host_steps.push_back({layer.name, "pad+split", fmt::format("{}x{} blocks", bm.grid_rows, bm.grid_cols)});
      auto bytes = blocks::binarise(bm);
      nr.host_steps.push_back({layer.name, "binarise", fmt::format("{} bytes", bytes.size())});
      img.write_region(layer.inp, bytes);
      ++nr.reshape_count;
    }
    sim::RunResult r = sim::run(img, layer.instr, options);
    for (const auto& w : r.dep_warnings) nr.dep_warnings.push_back(layer.name + ": " + w);
    nr.layer_stats.push_back(r.stats);
    nr.total.gemm_loop_count += r.stats.gemm_loop_count;
    nr.total.reset_loop_count += r.stats.reset_loop_count;
    nr.total.gemm_inner_loop_count += r.stats.gemm_inner_loop_count;
    nr.total.alu_loop_count += r.stats.alu_loop_count;
    nr.total.dram_bytes_loaded += r.stats.dram_bytes_loaded;
    nr.total.dram_bytes_stored += r.stats.dram_bytes_stored;
    nr.total.instruction_count += r.stats.instruction_count;
  }
  nr.output = decode_layer_output(plan.back(), img, nullptr);
  return nr;
}

}  // namespace tensor
}  // namespace vta
