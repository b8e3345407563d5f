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

#include "vta/blocks.h"

#include <fmt/format.h>

#include <limits>

#include "vta/error.h"

namespace vta {
namespace blocks {

const char* KindName(Kind kind) {
  switch (kind) {
    case Kind::kInp:
      return "INP";
    case Kind::kWgt:
      return "WGT";
    case Kind::kAcc:
      return "ACC";
    case Kind::kOut:
      return "OUT";
  }
  return "?";
}

std::optional<Kind> ParseKind(const std::string& name) {
  for (Kind k : {Kind::kInp, Kind::kWgt, Kind::kAcc, Kind::kOut}) {
    if (name == KindName(k)) return k;
  }
  return std::nullopt;
}

uint32_t ElementBytes(Kind kind) { return kind == Kind::kAcc ? 4 : 1; }

Matrix::Matrix(uint32_t r, uint32_t c, std::vector<int32_t> e) : rows(r), cols(c), elements(std::move(e)) {
  if (elements.size() != size_t{r} * c) {
    throw Error(ErrorKind::kShape,
                fmt::format("matrix {}x{} given {} elements", r, c, elements.size()));
  }
}

Matrix matrix_padding(const Matrix& m, uint32_t block_size) {
  if (block_size == 0) throw Error(ErrorKind::kShape, "block_size must be positive");
  Matrix p(ceil_blocks(m.rows, block_size) * block_size, ceil_blocks(m.cols, block_size) * block_size);
  for (uint32_t r = 0; r < m.rows; ++r) {
    for (uint32_t c = 0; c < m.cols; ++c) p.at(r, c) = m.at(r, c);
  }
  return p;
}

BlockMatrix matrix_splitting(const Matrix& padded, uint32_t block_size, Kind kind) {
  if (block_size == 0 || padded.rows % block_size != 0 || padded.cols % block_size != 0) {
    throw Error(ErrorKind::kShape,
                fmt::format("matrix {}x{} is not a multiple of block size {}", padded.rows, padded.cols,
                            block_size));
  }
  BlockMatrix bm;
  bm.kind = kind;
  bm.block_size = block_size;
  bm.grid_rows = padded.rows / block_size;
  bm.grid_cols = padded.cols / block_size;
  bm.orig_rows = padded.rows;
  bm.orig_cols = padded.cols;
  bm.blocks.reserve(size_t{bm.grid_rows} * bm.grid_cols);
  for (uint32_t br = 0; br < bm.grid_rows; ++br) {
    for (uint32_t bc = 0; bc < bm.grid_cols; ++bc) {
      std::vector<int32_t> blk(size_t{block_size} * block_size);
      for (uint32_t r = 0; r < block_size; ++r) {
        for (uint32_t c = 0; c < block_size; ++c) {
          int32_t v = padded.at(br * block_size + r, bc * block_size + c);
          // Weights are kept transposed so each stored row is one output channel.
          if (kind == Kind::kWgt) {
            blk[size_t{c} * block_size + r] = v;
          } else {
            blk[size_t{r} * block_size + c] = v;
          }
        }
      }
      bm.blocks.push_back(std::move(blk));
    }
  }
  return bm;
}

BlockMatrix to_blocks(const Matrix& m, uint32_t block_size, Kind kind) {
  BlockMatrix bm = matrix_splitting(matrix_padding(m, block_size), block_size, kind);
  bm.orig_rows = m.rows;
  bm.orig_cols = m.cols;
  return bm;
}

std::vector<uint8_t> binarise(const BlockMatrix& bm) {
  const uint32_t width = ElementBytes(bm.kind);
  const int64_t lo = width == 4 ? std::numeric_limits<int32_t>::min() : -128;
  const int64_t hi = width == 4 ? std::numeric_limits<int32_t>::max() : 127;
  std::vector<uint8_t> out;
  out.reserve(bm.blocks.size() * bm.block_size * bm.block_size * width);
  for (size_t b = 0; b < bm.blocks.size(); ++b) {
    const auto& blk = bm.blocks[b];
    for (size_t e = 0; e < blk.size(); ++e) {
      int32_t v = blk[e];
      if (v < lo || v > hi) {
        throw Error(ErrorKind::kDomain,
                    fmt::format("{} block {} element ({}, {}) = {} outside [{}, {}]", KindName(bm.kind), b,
                                e / bm.block_size, e % bm.block_size, v, lo, hi));
      }
      auto u = static_cast<uint32_t>(v);
      for (uint32_t k = 0; k < width; ++k) out.push_back(static_cast<uint8_t>(u >> (8 * k)));
    }
  }
  return out;
}

BlockMatrix debinarise(std::span<const uint8_t> bytes, Kind kind, uint32_t grid_rows, uint32_t grid_cols,
                       uint32_t block_size) {
  const uint32_t width = ElementBytes(kind);
  const size_t area = size_t{block_size} * block_size;
  const size_t expect = size_t{grid_rows} * grid_cols * area * width;
  if (bytes.size() != expect) {
    throw Error(ErrorKind::kShape,
                fmt::format("{} payload has {} bytes, a {}x{} grid of {}x{} blocks needs {}", KindName(kind),
                            bytes.size(), grid_rows, grid_cols, block_size, block_size, expect));
  }
  BlockMatrix bm;
  bm.kind = kind;
  bm.block_size = block_size;
  bm.grid_rows = grid_rows;
  bm.grid_cols = grid_cols;
  bm.orig_rows = grid_rows * block_size;
  bm.orig_cols = grid_cols * block_size;
  size_t pos = 0;
  for (size_t b = 0; b < size_t{grid_rows} * grid_cols; ++b) {
    std::vector<int32_t> blk(area);
    for (auto& v : blk) {
      if (width == 4) {
        uint32_t u = 0;
        for (uint32_t k = 0; k < 4; ++k) u |= uint32_t{bytes[pos + k]} << (8 * k);
        v = static_cast<int32_t>(u);
      } else {
        v = static_cast<int8_t>(bytes[pos]);
      }
      pos += width;
    }
    bm.blocks.push_back(std::move(blk));
  }
  return bm;
}

Matrix merge_unpad(const BlockMatrix& bm, uint32_t orig_rows, uint32_t orig_cols) {
  const uint32_t bs = bm.block_size;
  if (orig_rows > bm.grid_rows * bs || orig_cols > bm.grid_cols * bs) {
    throw Error(ErrorKind::kShape, fmt::format("cannot crop a {}x{} block grid to {}x{}", bm.grid_rows,
                                               bm.grid_cols, orig_rows, orig_cols));
  }
  Matrix m(orig_rows, orig_cols);
  for (uint32_t r = 0; r < orig_rows; ++r) {
    for (uint32_t c = 0; c < orig_cols; ++c) {
      const auto& blk = bm.block(r / bs, c / bs);
      uint32_t ir = r % bs, ic = c % bs;
      m.at(r, c) = bm.kind == Kind::kWgt ? blk[size_t{ic} * bs + ir] : blk[size_t{ir} * bs + ic];
    }
  }
  return m;
}

}  // namespace blocks
}  // namespace vta
