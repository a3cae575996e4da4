// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgecrack/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "edgecrack/error.hpp"

namespace edgecrack {

FloatTensor make_tensor(Shape shape, float fill) {
  FloatTensor t;
  t.data.assign(static_cast<std::size_t>(element_count(shape)), fill);
  t.shape = std::move(shape);
  return t;
}

namespace {

struct Geometry {
  std::int64_t in_h, in_w, in_c;
  std::int64_t out_h, out_w, out_c;
  std::int64_t k_h, k_w;
  std::int64_t stride;
  std::int64_t pad_top, pad_left;
};

Geometry conv_geometry(const Shape& in, const Shape& w, const Shape& out, const Conv2D& conv) {
  Geometry g{in[1], in[2], in[3], out[1], out[2], out[3], w[1], w[2], conv.stride, 0, 0};
  if (conv.padding == Padding::Same) {
    g.pad_top = std::max<std::int64_t>((g.out_h - 1) * g.stride + g.k_h - g.in_h, 0) / 2;
    g.pad_left = std::max<std::int64_t>((g.out_w - 1) * g.stride + g.k_w - g.in_w, 0) / 2;
  }
  return g;
}

// Shared loop nest for float and integer convolution. `Acc` is float or
// int32; `load` returns the (zero-point corrected) input value.
template <typename Acc, typename In, typename W, typename Bias, typename Store>
void conv_loop(const Geometry& g, const In* in, const W* weights, const Bias* bias, Store store) {
  const std::int64_t k_stride = g.k_h * g.k_w * g.in_c;
  for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
    for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
      const std::int64_t iy0 = oy * g.stride - g.pad_top;
      const std::int64_t ix0 = ox * g.stride - g.pad_left;
      const std::int64_t ky_begin = std::max<std::int64_t>(0, -iy0);
      const std::int64_t ky_end = std::min(g.k_h, g.in_h - iy0);
      const std::int64_t kx_begin = std::max<std::int64_t>(0, -ix0);
      const std::int64_t kx_end = std::min(g.k_w, g.in_w - ix0);
      for (std::int64_t o = 0; o < g.out_c; ++o) {
        Acc acc = static_cast<Acc>(bias[o]);
        const W* wo = weights + o * k_stride;
        for (std::int64_t ky = ky_begin; ky < ky_end; ++ky) {
          for (std::int64_t kx = kx_begin; kx < kx_end; ++kx) {
            const In* px = in + ((iy0 + ky) * g.in_w + (ix0 + kx)) * g.in_c;
            const W* wk = wo + (ky * g.k_w + kx) * g.in_c;
            for (std::int64_t c = 0; c < g.in_c; ++c) {
              acc += static_cast<Acc>(px[c]) * static_cast<Acc>(wk[c]);
            }
          }
        }
        store((oy * g.out_w + ox) * g.out_c + o, acc);
      }
    }
  }
}

template <typename T>
void maxpool_loop(const Shape& in, const Shape& out, const MaxPool2D& pool, const T* src, T* dst) {
  const std::int64_t in_w = in[2];
  const std::int64_t c_n = in[3];
  for (std::int64_t oy = 0; oy < out[1]; ++oy) {
    for (std::int64_t ox = 0; ox < out[2]; ++ox) {
      for (std::int64_t c = 0; c < c_n; ++c) {
        T best = std::numeric_limits<T>::lowest();
        for (std::int64_t ky = 0; ky < pool.window; ++ky) {
          for (std::int64_t kx = 0; kx < pool.window; ++kx) {
            const std::int64_t iy = oy * pool.stride + ky;
            const std::int64_t ix = ox * pool.stride + kx;
            best = std::max(best, src[(iy * in_w + ix) * c_n + c]);
          }
        }
        dst[(oy * out[2] + ox) * c_n + c] = best;
      }
    }
  }
}

std::int8_t saturate_int8(std::int64_t v) {
  return static_cast<std::int8_t>(std::clamp<std::int64_t>(v, kQMin, kQMax));
}

}  // namespace

FloatTensor run_float(const ModelGraph& model, const FloatTensor& input,
                      const FloatObserver& observer) {
  if (input.shape != model.input().shape ||
      input.data.size() != static_cast<std::size_t>(element_count(input.shape))) {
    throw Error(Errc::ShapeMismatch, "input does not match the model input shape");
  }
  FloatTensor cur = input;
  for (const auto& node : model.nodes) {
    const Shape& out_shape = model.tensor(node.output).shape;
    FloatTensor next;
    next.shape = out_shape;

    if (const auto* conv = std::get_if<Conv2D>(&node.kind)) {
      const auto& w = model.weights.at(node.weight());
      const auto& b = model.weights.at(node.bias());
      const Geometry g = conv_geometry(cur.shape, model.tensor(node.weight()).shape, out_shape, *conv);
      next.data.resize(static_cast<std::size_t>(element_count(out_shape)));
      conv_loop<float>(g, cur.data.data(), w.data(), b.data(),
                       [&](std::int64_t i, float acc) { next.data[i] = acc; });
    } else if (const auto* pool = std::get_if<MaxPool2D>(&node.kind)) {
      next.data.resize(static_cast<std::size_t>(element_count(out_shape)));
      maxpool_loop(cur.shape, out_shape, *pool, cur.data.data(), next.data.data());
    } else if (std::holds_alternative<Relu>(node.kind)) {
      next.data = std::move(cur.data);
      for (auto& v : next.data) v = std::max(v, 0.0f);
    } else if (std::holds_alternative<Flatten>(node.kind)) {
      next.data = std::move(cur.data);
    } else if (std::holds_alternative<Dense>(node.kind)) {
      const auto& w = model.weights.at(node.weight());
      const auto& b = model.weights.at(node.bias());
      const std::size_t n_in = cur.data.size();
      next.data.resize(b.size());
      for (std::size_t o = 0; o < b.size(); ++o) {
        float acc = b[o];
        const float* row = w.data() + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * cur.data[i];
        next.data[o] = acc;
      }
    } else {  // Softmax
      next.data = std::move(cur.data);
      const float peak = *std::max_element(next.data.begin(), next.data.end());
      double sum = 0.0;
      for (auto& v : next.data) {
        v = std::exp(v - peak);
        sum += v;
      }
      for (auto& v : next.data) v = static_cast<float>(v / sum);
    }
    if (observer) observer(node, next);
    cur = std::move(next);
  }
  return cur;
}

void require_int8_kernels(const ModelGraph& graph) {
  for (const auto& node : graph.nodes) {
    if (std::holds_alternative<Softmax>(node.kind)) {
      throw Error(Errc::NotDeployable,
                  "node '" + node.id + "' (" + std::string(op_name(node.kind)) +
                      ") has no int8 kernel; strip it and post-process on the host");
    }
  }
}

Int8Tensor quantize_tensor(const FloatTensor& t, const QuantParams& p) {
  Int8Tensor q;
  q.shape = t.shape;
  q.data.resize(t.data.size());
  for (std::size_t i = 0; i < t.data.size(); ++i) q.data[i] = quantize_value(t.data[i], p);
  return q;
}

FloatTensor dequantize_tensor(const Int8Tensor& t, const QuantParams& p) {
  FloatTensor f;
  f.shape = t.shape;
  f.data.resize(t.data.size());
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    f.data[i] = static_cast<float>(dequantize_value(t.data[i], p));
  }
  return f;
}

namespace {

template <typename Observer>
Int8Tensor execute_int8(const QuantizedModel& qm, Int8Tensor cur, Observer&& observe) {
  const ModelGraph& graph = qm.graph;
  std::vector<std::int16_t> centered;
  for (const auto& node : graph.nodes) {
    const Shape& out_shape = graph.tensor(node.output).shape;
    Int8Tensor next;
    next.shape = out_shape;

    if (has_parameters(node.kind)) {
      const QuantParams& in_p = qm.act_qparams.at(node.activation());
      const QuantParams& out_p = qm.act_qparams.at(node.output);
      const RequantMultiplier& rq = qm.requant.at(node.id);
      const auto& w = qm.weight_q.at(node.weight());
      const auto& b = qm.bias_q.at(node.bias());

      centered.resize(cur.data.size());
      for (std::size_t i = 0; i < cur.data.size(); ++i) {
        centered[i] = static_cast<std::int16_t>(cur.data[i] - in_p.zero_point);
      }
      next.data.resize(static_cast<std::size_t>(element_count(out_shape)));
      auto store = [&](std::int64_t i, std::int32_t acc) {
        next.data[i] = saturate_int8(out_p.zero_point + apply_requant(acc, rq));
      };
      if (const auto* conv = std::get_if<Conv2D>(&node.kind)) {
        const Geometry g =
            conv_geometry(cur.shape, graph.tensor(node.weight()).shape, out_shape, *conv);
        conv_loop<std::int32_t>(g, centered.data(), w.data(), b.data(), store);
      } else {
        const std::size_t n_in = centered.size();
        for (std::size_t o = 0; o < b.size(); ++o) {
          std::int32_t acc = b[o];
          const std::int8_t* row = w.data() + o * n_in;
          for (std::size_t i = 0; i < n_in; ++i) acc += centered[i] * row[i];
          store(static_cast<std::int64_t>(o), acc);
        }
      }
    } else if (const auto* pool = std::get_if<MaxPool2D>(&node.kind)) {
      next.data.resize(static_cast<std::size_t>(element_count(out_shape)));
      maxpool_loop(cur.shape, out_shape, *pool, cur.data.data(), next.data.data());
    } else if (std::holds_alternative<Relu>(node.kind)) {
      const std::int8_t zp = static_cast<std::int8_t>(qm.act_qparams.at(node.output).zero_point);
      next.data = std::move(cur.data);
      for (auto& v : next.data) v = std::max(v, zp);
    } else {  // Flatten
      next.data = std::move(cur.data);
    }
    observe(node, next);
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

RawOutput run_quant(const QuantizedModel& qm, const FloatTensor& input) {
  require_int8_kernels(qm.graph);
  if (input.shape != qm.graph.input().shape ||
      input.data.size() != static_cast<std::size_t>(element_count(input.shape))) {
    throw Error(Errc::ShapeMismatch, "input does not match the model input shape");
  }
  Int8Tensor out = execute_int8(qm, quantize_tensor(input, qm.input_qparams()),
                                [](const NodeSpec&, const Int8Tensor&) {});
  return RawOutput{std::move(out.data), qm.output_qparams()};
}

std::map<std::string, Int8Tensor> run_quant_trace(const QuantizedModel& qm,
                                                  const Int8Tensor& input) {
  require_int8_kernels(qm.graph);
  if (input.shape != qm.graph.input().shape) {
    throw Error(Errc::ShapeMismatch, "input does not match the model input shape");
  }
  std::map<std::string, Int8Tensor> trace;
  trace[qm.graph.input_id] = input;
  execute_int8(qm, input, [&](const NodeSpec& node, const Int8Tensor& t) { trace[node.output] = t; });
  return trace;
}

}  // namespace edgecrack
