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
 * \brief Golden integer model. Everything here is written from the textbook
 *  definitions (triple-loop matmul, direct convolution) and shares no index
 *  arithmetic with the lowering code.
 * \file oracle.h
 */
#ifndef VTA_ORACLE_H_
#define VTA_ORACLE_H_

#include <cstdint>
#include <vector>

#include "vta/blocks.h"
#include "vta/progbuild.h"
#include "vta/tensorfront.h"

namespace vta {
namespace oracle {

using blocks::Matrix;
using tensor::Tensor4;

/*! \brief C = A * B + X with int32 wraparound. \throws Error(kShape) on mismatched dims. */
Matrix ref_matmul(const Matrix& a, const Matrix& b, const Matrix* x = nullptr);

/*! \brief Direct convolution with zero padding and optional per-filter bias, int32 wraparound. */
Tensor4 ref_conv(const Tensor4& input, const Tensor4& weight, uint32_t stride, uint32_t pad,
                 const std::vector<int32_t>* bias = nullptr);

/*! \brief Fully-connected layer over the flattened input; weight is (n_out, n_in, 1, 1). */
Tensor4 ref_fc(const Tensor4& input, const Tensor4& weight, const std::vector<int32_t>* bias = nullptr);

int32_t ref_relu(int32_t v);
/*! \brief Arithmetic right shift then clip to [-128, 127]. */
int32_t ref_requant(int32_t v, uint32_t shift);
/*! \brief Low byte, two's complement. */
int32_t ref_truncate8(int32_t v);
/*! \brief One element-wise ALU op on accumulator values. */
int32_t ref_alu(isa::AluOp op, int32_t a, int32_t b);

/*! \brief Window pooling; average is the window sum divided by its area, rounding toward minus infinity. */
Tensor4 ref_pool(const Tensor4& t, tensor::PoolMode mode, uint32_t window, uint32_t stride);

/*! \brief One layer as int8 output: linear op, ReLU, requant, then pooling. */
Tensor4 ref_layer(const tensor::LayerSpec& layer, const Tensor4& input);
Tensor4 ref_network(const std::vector<tensor::LayerSpec>& layers, const Tensor4& input);

/*!
 * \brief Expected OUT contents of a matmul job: operands zero-extended to
 *  whole blocks, C = A * B + X, post-ops applied to every element, low byte kept.
 */
Matrix ref_job(const Matrix& a, const Matrix& b, const Matrix* x, const std::vector<prog::AluStep>& ops,
               uint32_t block_size);

/*! \brief ref_job serialized in the OUT binary layout. */
std::vector<uint8_t> expected_out_bytes(const Matrix& a, const Matrix& b, const Matrix* x,
                                        const std::vector<prog::AluStep>& ops, uint32_t block_size);

}  // namespace oracle
}  // namespace vta

#endif  // VTA_ORACLE_H_
