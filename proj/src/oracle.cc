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

#include "vta/oracle.h"

#include <fmt/format.h>

#include <algorithm>
#include <bit>

#include "vta/error.h"

namespace vta {
namespace oracle {

namespace {

int32_t WrapAdd(int32_t a, int64_t b) { return static_cast<int32_t>(static_cast<uint32_t>(a) + static_cast<uint32_t>(b)); }

int64_t FloorDiv(int64_t a, int64_t b) {
  int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

}  // namespace

Matrix ref_matmul(const Matrix& a, const Matrix& b, const Matrix* x) {
  if (a.cols != b.rows) throw Error(ErrorKind::kShape, fmt::format("cannot multiply {}x{} by {}x{}", a.rows, a.cols, b.rows, b.cols));
  if (x && (x->rows != a.rows || x->cols != b.cols)) {
    throw Error(ErrorKind::kShape, fmt::format("bias {}x{} does not match product {}x{}", x->rows, x->cols, a.rows, b.cols));
  }
  Matrix c(a.rows, b.cols);
  for (uint32_t i = 0; i < a.rows; ++i) {
    for (uint32_t j = 0; j < b.cols; ++j) {
      int32_t s = x ? x->at(i, j) : 0;
      for (uint32_t k = 0; k < a.cols; ++k) s = WrapAdd(s, int64_t{a.at(i, k)} * b.at(k, j));
      c.at(i, j) = s;
    }
  }
  return c;
}

Tensor4 ref_conv(const Tensor4& input, const Tensor4& weight, uint32_t stride, uint32_t pad,
                 const std::vector<int32_t>* bias) {
  if (input.c != weight.c) throw Error(ErrorKind::kShape, "input channels do not match filter channels");
  if (stride == 0) throw Error(ErrorKind::kShape, "stride must be positive");
  const int64_t ph = int64_t{input.h} + 2 * pad, pw = int64_t{input.w} + 2 * pad;
  if (weight.h > ph || weight.w > pw) throw Error(ErrorKind::kShape, "kernel larger than padded input");
  if (bias && bias->size() != weight.n) throw Error(ErrorKind::kShape, "bias length differs from filter count");
  const uint32_t oh = static_cast<uint32_t>((ph - weight.h) / stride + 1);
  const uint32_t ow = static_cast<uint32_t>((pw - weight.w) / stride + 1);
  Tensor4 out(input.n, weight.n, oh, ow);
  for (uint32_t n = 0; n < input.n; ++n) {
    for (uint32_t f = 0; f < weight.n; ++f) {
      for (uint32_t y = 0; y < oh; ++y) {
        for (uint32_t x = 0; x < ow; ++x) {
          int32_t s = bias ? (*bias)[f] : 0;
          for (uint32_t c = 0; c < input.c; ++c) {
            for (uint32_t ky = 0; ky < weight.h; ++ky) {
              for (uint32_t kx = 0; kx < weight.w; ++kx) {
                int64_t iy = int64_t{y} * stride + ky - pad;
                int64_t ix = int64_t{x} * stride + kx - pad;
                if (iy < 0 || ix < 0 || iy >= input.h || ix >= input.w) continue;
                s = WrapAdd(s, int64_t{input.at(n, c, static_cast<uint32_t>(iy), static_cast<uint32_t>(ix))} *
                                   weight.at(f, c, ky, kx));
              }
            }
          }
          out.at(n, f, y, x) = s;
        }
      }
    }
  }
  return out;
}

Tensor4 ref_fc(const Tensor4& input, const Tensor4& weight, const std::vector<int32_t>* bias) {
  const size_t n_in = size_t{input.c} * input.h * input.w;
  if (weight.c * weight.h * weight.w != n_in) {
    throw Error(ErrorKind::kShape, fmt::format("fully-connected layer expects {} inputs, got {}",
                                               weight.c * weight.h * weight.w, n_in));
  }
  if (bias && bias->size() != weight.n) throw Error(ErrorKind::kShape, "bias length differs from output count");
  Tensor4 out(input.n, weight.n, 1, 1);
  for (uint32_t n = 0; n < input.n; ++n) {
    for (uint32_t o = 0; o < weight.n; ++o) {
      int32_t s = bias ? (*bias)[o] : 0;
      for (size_t i = 0; i < n_in; ++i) {
        s = WrapAdd(s, int64_t{input.data[n * n_in + i]} * weight.data[o * n_in + i]);
      }
      out.at(n, o, 0, 0) = s;
    }
  }
  return out;
}

int32_t ref_relu(int32_t v) { return v > 0 ? v : 0; }

int32_t ref_requant(int32_t v, uint32_t shift) {
  int64_t q = FloorDiv(v, int64_t{1} << std::min(shift, 31u));
  return static_cast<int32_t>(std::clamp<int64_t>(q, -128, 127));
}

int32_t ref_truncate8(int32_t v) {
  int32_t low = static_cast<int32_t>(static_cast<uint32_t>(v) & 0xFF);
  return low >= 128 ? low - 256 : low;
}

int32_t ref_alu(isa::AluOp op, int32_t a, int32_t b) {
  switch (op) {
    case isa::AluOp::kMin:
      return a < b ? a : b;
    case isa::AluOp::kMax:
      return a > b ? a : b;
    case isa::AluOp::kAdd:
      return WrapAdd(a, b);
    case isa::AluOp::kShr:
      if (b >= 0) return static_cast<int32_t>(FloorDiv(a, int64_t{1} << std::min(b, 31)));
      return static_cast<int32_t>(static_cast<uint32_t>(a) << std::min(-int64_t{b}, int64_t{31}));
  }
  return a;
}

Tensor4 ref_pool(const Tensor4& t, tensor::PoolMode mode, uint32_t window, uint32_t stride) {
  if (window == 0 || stride == 0 || window > t.h || window > t.w) throw Error(ErrorKind::kShape, "invalid pooling geometry");
  const uint32_t oh = (t.h - window) / stride + 1, ow = (t.w - window) / stride + 1;
  Tensor4 out(t.n, t.c, oh, ow);
  for (uint32_t n = 0; n < t.n; ++n) {
    for (uint32_t c = 0; c < t.c; ++c) {
      for (uint32_t y = 0; y < oh; ++y) {
        for (uint32_t x = 0; x < ow; ++x) {
          int64_t sum = 0;
          int32_t best = INT32_MIN;
          for (uint32_t dy = 0; dy < window; ++dy) {
            for (uint32_t dx = 0; dx < window; ++dx) {
              int32_t v = t.at(n, c, y * stride + dy, x * stride + dx);
              sum += v;
              best = std::max(best, v);
            }
          }
          out.at(n, c, y, x) = mode == tensor::PoolMode::kMax
                                   ? best
                                   : static_cast<int32_t>(FloorDiv(sum, int64_t{window} * window));
        }
      }
    }
  }
  return out;
}

Tensor4 ref_layer(const tensor::LayerSpec& layer, const Tensor4& input) {
  const std::vector<int32_t>* bias = layer.bias ? &*layer.bias : nullptr;
  Tensor4 t = layer.kind == tensor::LayerKind::kFullyConnected ? ref_fc(input, layer.weight, bias)
                                                                : ref_conv(input, layer.weight, layer.stride, layer.pad, bias);
  for (auto& v : t.data) {
    if (layer.relu) v = ref_relu(v);
    v = ref_requant(v, layer.requant_shift);
  }
  if (layer.pool) t = ref_pool(t, layer.pool->mode, layer.pool->window, layer.pool->stride);
  return t;
}

Tensor4 ref_network(const std::vector<tensor::LayerSpec>& layers, const Tensor4& input) {
  Tensor4 t = input;
  for (const auto& layer : layers) t = ref_layer(layer, t);
  return t;
}

Matrix ref_job(const Matrix& a, const Matrix& b, const Matrix* x, const std::vector<prog::AluStep>& ops,
               uint32_t block_size) {
  auto round_up = [&](uint32_t n) { return (n + block_size - 1) / block_size * block_size; };
  auto extend = [&](const Matrix& m) {
    Matrix e(round_up(m.rows), round_up(m.cols));
    for (uint32_t r = 0; r < m.rows; ++r) {
      for (uint32_t c = 0; c < m.cols; ++c) e.at(r, c) = m.at(r, c);
    }
    return e;
  };
  Matrix ea = extend(a), eb = extend(b);
  std::optional<Matrix> ex;
  if (x) ex = extend(*x);
  Matrix c = ref_matmul(ea, eb, ex ? &*ex : nullptr);
  for (auto& v : c.elements) {
    for (const auto& op : ops) v = ref_alu(op.op, v, op.imm ? *op.imm : v);
    v = ref_truncate8(v);
  }
  return c;
}

std::vector<uint8_t> expected_out_bytes(const Matrix& a, const Matrix& b, const Matrix* x,
                                        const std::vector<prog::AluStep>& ops, uint32_t block_size) {
  Matrix c = ref_job(a, b, x, ops, block_size);
  return blocks::binarise(blocks::matrix_splitting(c, block_size, blocks::Kind::kOut));
}

}  // namespace oracle
}  // namespace vta
