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
 * \file tensorfront.h
 * \brief Tensor-level front end: lowers convolution and fully-connected
 *  layers to block matrix multiplications and chains layers in one DRAM image.
 */
#ifndef VTA_TENSORFRONT_H_
#define VTA_TENSORFRONT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vta/blocks.h"
#include "vta/config.h"
#include "vta/dram.h"
#include "vta/funcsim.h"
#include "vta/progbuild.h"

namespace vta {
namespace tensor {

using blocks::Matrix;

/*! \brief NCHW integer tensor. */
struct Tensor4 {
  uint32_t n{0}, c{0}, h{0}, w{0};
  std::vector<int32_t> data;

  Tensor4() = default;
  Tensor4(uint32_t n_, uint32_t c_, uint32_t h_, uint32_t w_)
      : n(n_), c(c_), h(h_), w(w_), data(size_t{n_} * c_ * h_ * w_, 0) {}

  size_t index(uint32_t in, uint32_t ic, uint32_t ih, uint32_t iw) const {
    return ((size_t{in} * c + ic) * h + ih) * w + iw;
  }
  int32_t& at(uint32_t in, uint32_t ic, uint32_t ih, uint32_t iw) { return data[index(in, ic, ih, iw)]; }
  int32_t at(uint32_t in, uint32_t ic, uint32_t ih, uint32_t iw) const { return data[index(in, ic, ih, iw)]; }
  std::string shape() const;
  bool operator==(const Tensor4&) const = default;
};

enum class LayerKind : uint8_t { kConv, kFullyConnected };
enum class PoolMode : uint8_t { kAvg, kMax };

struct Pooling {
  PoolMode mode{PoolMode::kAvg};
  uint32_t window{2};
  uint32_t stride{2};

  bool operator==(const Pooling&) const = default;
};

/*!
 * \brief One layer: a dense linear op, then ReLU, requantizing shift, int8
 *  clip and optional pooling. A fully-connected layer is a 1x1 convolution
 *  over the flattened input.
 */
struct LayerSpec {
  std::string name;
  LayerKind kind{LayerKind::kConv};
  uint32_t stride{1};
  uint32_t pad{0};
  /*! \brief (n_f, f_c, f_h, f_w); for fully connected (n_out, n_in, 1, 1). */
  Tensor4 weight;
  std::optional<std::vector<int32_t>> bias;
  bool relu{false};
  std::optional<Pooling> pool;
  uint32_t requant_shift{0};
};

/*! \brief Output spatial size of a convolution along one axis. */
uint32_t conv_out_dim(uint32_t in, uint32_t kernel, uint32_t stride, uint32_t pad);

/*!
 * \brief One row per output position, each the flattened (channel, kernel row,
 *  kernel column) patch of batch element 0.
 * \throws Error(kShape) when the kernel does not fit the padded input.
 */
Matrix im2row(const Tensor4& t, uint32_t kh, uint32_t kw, uint32_t stride, uint32_t pad);

/*! \brief One column per filter, rows in the same patch order as im2row. */
Matrix ker2col(const Tensor4& w);

/*! \brief Column j becomes channel j; rows scan (h, w) row-major. */
Tensor4 mat2tensor(const Matrix& m, uint32_t c, uint32_t h, uint32_t w);
/*! \brief Inverse of mat2tensor for a batch-1 tensor. */
Matrix tensor2mat(const Tensor4& t);

/*!
 * \brief Host pooling. Average pooling needs a power-of-two window area and
 *  computes the window sum shifted right arithmetically.
 */
Tensor4 host_pool(const Tensor4& t, const Pooling& pool);

/*! \brief Flatten a tensor into the input expected by a fully-connected layer. */
Tensor4 flatten_for_fc(const Tensor4& t);

/*! \brief Element-wise post-ops realizing ReLU, requantization and the int8 clip. */
std::vector<prog::AluStep> layer_alu_ops(const LayerSpec& layer);

struct CompiledLayer {
  prog::MatMulJob job;
  Matrix a;  // im2row output, unpadded
  Matrix b;  // ker2col output, unpadded
  std::optional<Matrix> x;
  /*! \brief Pre-pooling output geometry: rows = out_h * out_w, cols = out_c. */
  uint32_t out_c{0}, out_h{0}, out_w{0};
};

/*! \throws Error(kShape) when the layer does not match the input dims. */
void check_layer(const LayerSpec& layer, const Tensor4& input_dims);

/*! \brief Lower a layer applied to `input` into a matmul job. */
CompiledLayer compile_layer(const LayerSpec& layer, const Tensor4& input, const VtaConfig& cfg);

/*! \brief Spatial dims after the layer's pooling, if any. */
Tensor4 layer_output_dims(const LayerSpec& layer, const Tensor4& input_dims);

/*! \brief Everything the runtime needs to drive one layer of a chained network. */
struct LayerRun {
  std::string name;
  dram::Region instr;
  dram::Region inp;
  dram::Region out;
  /*! \brief Input produced on the host from the previous layer's output. */
  bool host_reshape{false};
  /*! \brief Input region is the previous layer's OUT region. */
  bool aliased{false};
  // im2row geometry of this layer.
  uint32_t in_c{0}, in_h{0}, in_w{0};
  uint32_t kh{1}, kw{1}, stride{1}, pad{0};
  // Pre-pooling output geometry and its block grid.
  uint32_t out_c{0}, out_h{0}, out_w{0};
  uint32_t out_grid_rows{0}, out_grid_cols{0};
  std::optional<Pooling> pool;
};

struct HostStep {
  std::string layer;
  std::string step;
  std::string shape;
};

struct ChainedLayer {
  LayerRun run;
  CompiledLayer compiled;
  prog::CompiledJob job;
};

struct ChainedNetwork {
  std::vector<ChainedLayer> layers;
  uint32_t reshape_count{0};
  std::vector<LayerRun> plan() const;
};

/*!
 * \brief Compile every layer into one DRAM image. The first layer's input is
 *  written now; later inputs are produced at run time, either by a host
 *  reshape or by aliasing the previous OUT region when the block layouts agree.
 */
ChainedNetwork chain_layers(const std::vector<LayerSpec>& layers, const Tensor4& input, dram::DramImage& img);

struct NetworkRun {
  Tensor4 output;
  std::vector<sim::RunStats> layer_stats;
  sim::RunStats total;
  std::vector<HostStep> host_steps;
  std::vector<std::string> dep_warnings;
  uint32_t reshape_count{0};
};

/*! \brief Execute a chained network layer by layer, reshaping on the host where planned. */
NetworkRun run_network(const std::vector<LayerRun>& plan, dram::DramImage& img,
                       const sim::RunOptions& options = {});

/*! \brief Decode a layer's OUT region into its pooled output tensor. */
Tensor4 decode_layer_output(const LayerRun& layer, const dram::DramImage& img,
                            std::vector<HostStep>* steps = nullptr);

}  // namespace tensor
}  // namespace vta

#endif  // VTA_TENSORFRONT_H_
