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
 * \file blocks.h
 * \brief Host-side data pipeline: padding, block splitting and binary
 *  serialization of integer matrices, plus the inverse steps.
 */
#ifndef VTA_BLOCKS_H_
#define VTA_BLOCKS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vta {
namespace blocks {

enum class Kind : uint8_t { kInp, kWgt, kAcc, kOut };

const char* KindName(Kind kind);
std::optional<Kind> ParseKind(const std::string& name);
/*! \brief Serialized bytes per element: 4 for ACC, 1 otherwise. */
uint32_t ElementBytes(Kind kind);

/*! \brief Row-major integer matrix. Values are int32 so host math can exceed int8. */
struct Matrix {
  uint32_t rows{0};
  uint32_t cols{0};
  std::vector<int32_t> elements;

  Matrix() = default;
  Matrix(uint32_t r, uint32_t c) : rows(r), cols(c), elements(size_t{r} * c, 0) {}
  Matrix(uint32_t r, uint32_t c, std::vector<int32_t> e);

  int32_t& at(uint32_t r, uint32_t c) { return elements[size_t{r} * cols + c]; }
  int32_t at(uint32_t r, uint32_t c) const { return elements[size_t{r} * cols + c]; }
  bool operator==(const Matrix&) const = default;
};

/*!
 * \brief Padded matrix cut into square blocks, listed row by row.
 *
 * WGT blocks hold the transpose of the logical block; the block order is
 * unchanged. Each block is block_size * block_size elements, row-major.
 */
struct BlockMatrix {
  Kind kind{Kind::kInp};
  uint32_t block_size{0};
  uint32_t grid_rows{0};
  uint32_t grid_cols{0};
  uint32_t orig_rows{0};
  uint32_t orig_cols{0};
  std::vector<std::vector<int32_t>> blocks;

  const std::vector<int32_t>& block(uint32_t r, uint32_t c) const { return blocks[size_t{r} * grid_cols + c]; }
  bool operator==(const BlockMatrix&) const = default;
};

/*! \brief Round both dimensions up to a multiple of block_size with zeros. */
Matrix matrix_padding(const Matrix& m, uint32_t block_size);

/*!
 * \brief Split a padded matrix into blocks.
 * \throws Error(kShape) if a dimension is not a multiple of block_size.
 */
BlockMatrix matrix_splitting(const Matrix& padded, uint32_t block_size, Kind kind);

/*! \brief Padding followed by splitting, remembering the unpadded shape. */
BlockMatrix to_blocks(const Matrix& m, uint32_t block_size, Kind kind);

/*! \throws Error(kDomain) naming the first element outside the kind's integer range. */
std::vector<uint8_t> binarise(const BlockMatrix& bm);

/*! \throws Error(kShape) when the byte count does not match the grid. */
BlockMatrix debinarise(std::span<const uint8_t> bytes, Kind kind, uint32_t grid_rows,
                       uint32_t grid_cols, uint32_t block_size);

/*! \brief Reassemble the blocks and crop to orig_rows x orig_cols. */
Matrix merge_unpad(const BlockMatrix& bm, uint32_t orig_rows, uint32_t orig_cols);
inline Matrix merge_unpad(const BlockMatrix& bm) { return merge_unpad(bm, bm.orig_rows, bm.orig_cols); }

/*! \brief Number of blocks needed to cover n elements. */
inline uint32_t ceil_blocks(uint32_t n, uint32_t block_size) { return (n + block_size - 1) / block_size; }

}  // namespace blocks
}  // namespace vta

#endif  // VTA_BLOCKS_H_
