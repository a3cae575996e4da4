// Copyright 2026 The edgecrack Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgecrack/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "edgecrack/error.hpp"

namespace edgecrack {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

void write_text(const fs::path& path, std::string_view text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

constexpr int kFormatVersion = 1;
constexpr std::int64_t kMaxElements = std::int64_t{1} << 28;

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw Error(Errc::ParseError, where + ": " + what);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) parse_fail(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) parse_fail(where, "unknown field '" + key + "'");
  }
}

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(where, std::string("missing field '") + key + "'");
  return *it;
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) parse_fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

std::int64_t get_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) parse_fail(where, "expected an integer");
  return v.get<std::int64_t>();
}

Shape get_shape(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) parse_fail(where, "expected a non-empty integer array");
  Shape s;
  std::int64_t total = 1;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::int64_t d = get_int(v[i], where + "[" + std::to_string(i) + "]");
    if (d < 1) throw Error(Errc::NonPositiveDim, where + " has a dimension < 1");
    if (d > kMaxElements || (total *= d) > kMaxElements) parse_fail(where, "shape too large");
    s.push_back(d);
  }
  return s;
}

json node_params(const NodeSpec& node) {
  if (const auto* c = std::get_if<Conv2D>(&node.kind)) {
    return json{{"stride", c->stride}, {"padding", c->padding == Padding::Same ? "Same" : "Valid"}};
  }
  if (const auto* p = std::get_if<MaxPool2D>(&node.kind)) {
    return json{{"window", p->window}, {"stride", p->stride}};
  }
  return json::object();
}

json graph_to_json(const ModelGraph& g) {
  json nodes = json::array();
  for (const auto& node : g.nodes) {
    json n{{"id", node.id},
           {"kind", std::string(op_name(node.kind))},
           {"params", node_params(node)},
           {"output", node.output}};
    if (has_parameters(node.kind)) {
      n["weight_id"] = node.weight();
      n["weight_shape"] = g.tensor(node.weight()).shape;
      n["bias_id"] = node.bias();
      n["bias_shape"] = g.tensor(node.bias()).shape;
    }
    nodes.push_back(std::move(n));
  }
  return json{{"format_version", kFormatVersion},
              {"name", g.name},
              {"input", {{"id", g.input_id}, {"shape", g.input().shape}}},
              {"nodes", std::move(nodes)}};
}

OpKind parse_kind(const json& n, const std::string& where) {
  const std::string kind = get_string(n, "kind", where);
  const json empty = json::object();
  const json& params = n.contains("params") ? n.at("params") : empty;
  const std::string pw = where + ".params";
  if (kind == "Conv2D") {
    reject_unknown(params, {"stride", "padding"}, pw);
    Conv2D c;
    if (params.contains("stride")) c.stride = static_cast<int>(get_int(params.at("stride"), pw + ".stride"));
    if (params.contains("padding")) {
      const json& pad = params.at("padding");
      if (pad == "Same") {
        c.padding = Padding::Same;
      } else if (pad == "Valid") {
        c.padding = Padding::Valid;
      } else {
        parse_fail(pw + ".padding", "expected \"Same\" or \"Valid\"");
      }
    }
    if (c.stride < 1 || c.stride > 1024) parse_fail(pw + ".stride", "out of range");
    return c;
  }
  if (kind == "MaxPool2D") {
    reject_unknown(params, {"window", "stride"}, pw);
    MaxPool2D p;
    if (params.contains("window")) p.window = static_cast<int>(get_int(params.at("window"), pw + ".window"));
    if (params.contains("stride")) p.stride = static_cast<int>(get_int(params.at("stride"), pw + ".stride"));
    if (p.window < 1 || p.window > 1024 || p.stride < 1 || p.stride > 1024) {
      parse_fail(pw, "window/stride out of range");
    }
    return p;
  }
  OpKind k;
  if (kind == "Relu") {
    k = Relu{};
  } else if (kind == "Flatten") {
    k = Flatten{};
  } else if (kind == "Dense") {
    k = Dense{};
  } else if (kind == "Softmax") {
    k = Softmax{};
  } else {
    throw Error(Errc::UnknownOpKind, where + ": \"" + kind + "\"");
  }
  reject_unknown(params, {}, pw);
  return k;
}

// Builds the topology; parameter tensors are declared but hold no data.
ModelGraph graph_from_json(const json& doc) {
  const std::string root = "$";
  reject_unknown(doc, {"format_version", "name", "input", "nodes"}, root);
  if (get_int(field(doc, "format_version", root), "$.format_version") != kFormatVersion) {
    parse_fail("$.format_version", "unsupported version");
  }
  ModelGraph g;
  g.name = get_string(doc, "name", root);
  const json& input = field(doc, "input", root);
  reject_unknown(input, {"id", "shape"}, "$.input");
  g.input_id = input.contains("id") ? get_string(input, "id", "$.input") : "input";
  g.tensors[g.input_id] = TensorSpec{g.input_id, get_shape(field(input, "shape", "$.input"), "$.input.shape"),
                                     DataType::F32};

  const json& nodes = field(doc, "nodes", root);
  if (!nodes.is_array()) parse_fail("$.nodes", "expected an array");
  std::string prev = g.input_id;
  auto declare = [&](const std::string& id, Shape shape, const std::string& where) {
    if (!g.tensors.emplace(id, TensorSpec{id, std::move(shape), DataType::F32}).second) {
      parse_fail(where, "tensor id '" + id + "' declared twice");
    }
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "$.nodes[" + std::to_string(i) + "]";
    const json& n = nodes[i];
    reject_unknown(n, {"id", "kind", "params", "output", "weight_id", "weight_shape", "bias_id", "bias_shape"},
                   where);
    NodeSpec node;
    node.id = get_string(n, "id", where);
    node.kind = parse_kind(n, where);
    node.output = get_string(n, "output", where);
    node.inputs.push_back(prev);
    if (has_parameters(node.kind)) {
      const std::string w = get_string(n, "weight_id", where);
      const std::string b = get_string(n, "bias_id", where);
      declare(w, get_shape(field(n, "weight_shape", where), where + ".weight_shape"), where + ".weight_id");
      declare(b, get_shape(field(n, "bias_shape", where), where + ".bias_shape"), where + ".bias_id");
      node.inputs.push_back(w);
      node.inputs.push_back(b);
    } else {
      for (const char* key : {"weight_id", "weight_shape", "bias_id", "bias_shape"}) {
        if (n.contains(key)) parse_fail(where, std::string(op_name(node.kind)) + " takes no '" + key + "'");
      }
    }
    declare(node.output, {}, where + ".output");
    prev = node.output;
    g.nodes.push_back(std::move(node));
  }
  g.output_id = prev;
  return g;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(Errc::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) +
                                      " (offset " + std::to_string(e.byte) + "): " + e.what());
  }
}

std::vector<std::string> parameter_order(const ModelGraph& g) {
  std::vector<std::string> ids;
  for (const auto& node : g.nodes) {
    if (!has_parameters(node.kind)) continue;
    ids.push_back(node.weight());
    ids.push_back(node.bias());
  }
  return ids;
}

void ensure_valid(const ModelGraph& g, bool require_weight_data) {
  const auto violations = validate_graph(g, require_weight_data);
  if (violations.empty()) return;
  std::string msg;
  for (const auto& v : violations) {
    msg += (msg.empty() ? "" : "; ") + v.node_id + ": " + std::string(to_string(v.code)) + " " + v.detail;
  }
  throw Error(Errc::ParseError, msg);
}

}  // namespace

ModelGraph parse_model(std::string_view descriptor, std::span<const std::uint8_t> blob) {
  ModelGraph g;
  try {
    g = graph_from_json(parse_json(descriptor));
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, e.what());
  }

  std::size_t expected = 0;
  const auto ids = parameter_order(g);
  for (const auto& id : ids) expected += static_cast<std::size_t>(element_count(g.tensor(id).shape)) * 4;
  if (blob.size() != expected) {
    throw Error(Errc::WeightLengthMismatch, "weights blob has " + std::to_string(blob.size()) +
                                                " bytes, descriptor declares " + std::to_string(expected));
  }
  std::size_t offset = 0;
  for (const auto& id : ids) {
    auto& data = g.weights[id];
    data.resize(static_cast<std::size_t>(element_count(g.tensor(id).shape)));
    for (auto& v : data) {
      const std::uint32_t bits = std::uint32_t{blob[offset]} | std::uint32_t{blob[offset + 1]} << 8 |
                                 std::uint32_t{blob[offset + 2]} << 16 | std::uint32_t{blob[offset + 3]} << 24;
      v = std::bit_cast<float>(bits);
      offset += 4;
    }
  }
  ensure_valid(g, /*require_weight_data=*/true);
  return infer_shapes(std::move(g));
}

std::string serialize_descriptor(const ModelGraph& graph) { return graph_to_json(graph).dump(2) + "\n"; }

std::vector<std::uint8_t> serialize_weights(const ModelGraph& graph) {
  std::vector<std::uint8_t> out;
  for (const auto& id : parameter_order(graph)) {
    for (float v : graph.weights.at(id)) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
  }
  return out;
}

ModelGraph load_model(const fs::path& graph_path, const fs::path& weights_path) {
  const auto text = read_file(graph_path);
  const auto blob = read_file(weights_path);
  try {
    return parse_model(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()), blob);
  } catch (const Error& e) {
    if (e.code() == Errc::ParseError) throw Error(Errc::ParseError, graph_path.string() + ": " + e.detail());
    throw;
  }
}

void save_model(const ModelGraph& graph, const fs::path& graph_path, const fs::path& weights_path) {
  ensure_valid(graph, /*require_weight_data=*/true);
  write_text(graph_path, serialize_descriptor(graph));
  write_file(weights_path, serialize_weights(graph));
}

void save_quantized(const QuantizedModel& qm, const fs::path& path) {
  json acts = json::object();
  for (const auto& [id, p] : qm.act_qparams) acts[id] = {{"scale", p.scale}, {"zero_point", p.zero_point}};
  json params = json::object();
  for (const auto& [id, data] : qm.weight_q) {
    const auto& p = qm.weight_qparams.at(id);
    params[id] = {{"scale", p.scale}, {"zero_point", p.zero_point}, {"data", data}};
  }
  for (const auto& [id, data] : qm.bias_q) {
    const auto& p = qm.weight_qparams.at(id);
    params[id] = {{"scale", p.scale}, {"zero_point", p.zero_point}, {"data", data}};
  }
  json rq = json::object();
  for (const auto& [id, m] : qm.requant) rq[id] = {{"m0", m.m0}, {"shift", m.shift}};
  json doc{{"fixed_point_version", kFormatVersion},
           {"graph", graph_to_json(qm.graph)},
           {"activations", std::move(acts)},
           {"parameters", std::move(params)},
           {"requant", std::move(rq)}};
  write_text(path, doc.dump(1) + "\n");
}

QuantizedModel load_quantized(const fs::path& path) {
  const auto text = read_file(path);
  QuantizedModel qm;
  try {
    const json doc = parse_json(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()));
    reject_unknown(doc, {"fixed_point_version", "graph", "activations", "parameters", "requant"}, "$");
    if (get_int(field(doc, "fixed_point_version", "$"), "$.fixed_point_version") != kFormatVersion) {
      parse_fail("$.fixed_point_version", "unsupported version");
    }
    qm.graph = graph_from_json(field(doc, "graph", "$"));
    ensure_valid(qm.graph, /*require_weight_data=*/false);
    qm.graph = infer_shapes(std::move(qm.graph));
    for (auto& [id, t] : qm.graph.tensors) t.dtype = DataType::I8;

    for (const auto& [id, p] : field(doc, "activations", "$").items()) {
      reject_unknown(p, {"scale", "zero_point"}, "$.activations." + id);
      qm.act_qparams[id] = QuantParams{p.at("scale").get<double>(), p.at("zero_point").get<std::int32_t>()};
    }
    const json& params = field(doc, "parameters", "$");
    for (const auto& node : qm.graph.nodes) {
      if (!has_parameters(node.kind)) continue;
      const std::string wp = "$.parameters." + node.weight();
      const std::string bp = "$.parameters." + node.bias();
      const json& w = field(params, node.weight().c_str(), "$.parameters");
      const json& b = field(params, node.bias().c_str(), "$.parameters");
      reject_unknown(w, {"scale", "zero_point", "data"}, wp);
      reject_unknown(b, {"scale", "zero_point", "data"}, bp);
      qm.weight_qparams[node.weight()] = QuantParams{w.at("scale").get<double>(), w.at("zero_point").get<std::int32_t>()};
      qm.weight_qparams[node.bias()] = QuantParams{b.at("scale").get<double>(), b.at("zero_point").get<std::int32_t>()};
      qm.weight_q[node.weight()] = w.at("data").get<std::vector<std::int8_t>>();
      qm.bias_q[node.bias()] = b.at("data").get<std::vector<std::int32_t>>();
      qm.graph.tensors.at(node.bias()).dtype = DataType::I32;
    }
    if (params.size() != qm.weight_q.size() + qm.bias_q.size()) {
      parse_fail("$.parameters", "entries for tensors outside the graph");
    }
    for (const auto& [id, m] : field(doc, "requant", "$").items()) {
      reject_unknown(m, {"m0", "shift"}, "$.requant." + id);
      qm.requant[id] = RequantMultiplier{m.at("m0").get<std::int32_t>(), m.at("shift").get<std::int32_t>()};
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  const auto problems = check_quantized_model(qm);
  if (!problems.empty()) throw Error(Errc::InvariantViolation, path.string() + ": " + problems.front());
  return qm;
}

}  // namespace edgecrack
