#pragma once

#include <cstdint>
#include <cstring>
#include <string>

#include <json.hpp>

#include "shipgate/graph.hpp"

namespace shipgate {

// .aknw weight container, little-endian:
//
//   magic   "AKNW"
//   u16     version (currently 1)
//   u32     header length
//   bytes   JSON header: name, input spec, metadata, per-layer specs
//   bytes   per-layer payloads in layer order: weights, then pointwise
//           weights, then bias, one signed byte per quantized value
//   u32     CRC-32 of everything above
//
// The JSON header is human-inspectable (strings are plain UTF-8) and layer
// tensor shapes are derived from the specs rather than stored twice.

inline constexpr std::uint16_t kAknwVersion = 1;

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_tensor_payload(std::string& out, const QuantTensor& t) {
  for (std::int32_t v : t.values) {
    if (v < -128 || v > 127)
      fail(ErrorCategory::validation,
           "quantized value " + std::to_string(v) + " does not fit one byte");
    out.push_back(static_cast<char>(static_cast<std::int8_t>(v)));
  }
}

inline nlohmann::json layer_to_json(const LayerSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"kernel", s.kernel},
          {"stride", s.stride},
          {"same_padding", s.same_padding},
          {"in", s.in_channels},
          {"out", s.out_channels},
          {"activation", to_string(s.activation)},
          {"out_bits", s.out_bits},
          {"out_scale", s.out_scale},
          {"dw_out_scale", s.dw_out_scale},
          {"w_bits", s.weights.bit_width},
          {"w_scale", s.weights.scale},
          {"pw_bits", s.pw_weights.bit_width},
          {"pw_scale", s.pw_weights.scale},
          {"bias_bits", s.bias.bit_width},
          {"bias_scale", s.bias.scale},
          {"has_bias", s.has_bias()}};
}

// Tensor shapes implied by a layer spec, in payload order.
struct LayerShapes {
  Shape weights{0, 0, 0};
  Shape pw{0, 0, 0};
  Shape bias{0, 0, 0};
};

inline LayerShapes shapes_for(const LayerSpec& s, bool has_bias) {
  LayerShapes sh;
  switch (s.kind) {
    case LayerKind::conv2d:
      sh.weights = {s.out_channels * s.in_channels, s.kernel, s.kernel};
      break;
    case LayerKind::separable_conv2d:
      sh.weights = {s.in_channels, 3, 3};
      sh.pw = {s.out_channels * s.in_channels, 1, 1};
      break;
    case LayerKind::linear:
      sh.weights = {s.out_channels, 1, s.in_channels};
      break;
    case LayerKind::global_avg_pool:
      break;
  }
  if (has_bias) sh.bias = {s.out_channels, 1, 1};
  return sh;
}

inline QuantTensor read_tensor(const unsigned char* payload, std::size_t& pos,
                               Shape shape, int bits, double scale) {
  QuantTensor t;
  t.shape = shape;
  t.bit_width = bits;
  t.signedness = Signedness::kSigned;
  t.scale = scale;
  const std::size_t n = static_cast<std::size_t>(shape.size());
  t.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    t.values[i] = static_cast<std::int8_t>(payload[pos + i]);
  pos += n;
  return t;
}

}  // namespace detail

inline std::string serialize_model(const ModelGraph& g) {
  validate_graph(g);

  nlohmann::json header;
  header["name"] = g.name;
  header["input"] = {{"c", g.input.shape.channels},
                     {"h", g.input.shape.height},
                     {"w", g.input.shape.width},
                     {"bits", g.input.bit_width},
                     {"signed", g.input.signedness == Signedness::kSigned},
                     {"scale", g.input.scale}};
  header["metadata"] = {{"synthetic", g.metadata.synthetic},
                        {"seed", g.metadata.seed},
                        {"sparsity_bias", g.metadata.sparsity_bias},
                        {"parameter_count", g.metadata.parameter_count}};
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec& s : g.layers) layers.push_back(detail::layer_to_json(s));
  header["layers"] = layers;
  const std::string header_bytes = header.dump();

  std::string out;
  out += "AKNW";
  detail::put_u16(out, kAknwVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(header_bytes.size()));
  out += header_bytes;
  for (const LayerSpec& s : g.layers) {
    detail::put_tensor_payload(out, s.weights);
    detail::put_tensor_payload(out, s.pw_weights);
    detail::put_tensor_payload(out, s.bias);
  }
  detail::put_u32(out, crc32(out));
  return out;
}

inline ModelGraph deserialize_model(std::string_view bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 4 || std::memcmp(p, "AKNW", 4) != 0)
    fail(ErrorCategory::format, "malformed header: bad magic");
  if (bytes.size() < 14)
    fail(ErrorCategory::truncated, "file shorter than fixed header");
  const std::uint16_t version = detail::get_u16(p + 4);
  if (version != kAknwVersion)
    fail(ErrorCategory::version,
         "unsupported container version " + std::to_string(version));
  const std::uint32_t header_len = detail::get_u32(p + 6);
  if (10 + static_cast<std::size_t>(header_len) + 4 > bytes.size())
    fail(ErrorCategory::truncated, "declared header exceeds file size");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(10, header_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::format, std::string("malformed header JSON: ") + e.what());
  }

  ModelGraph g;
  try {
    g.name = header.at("name").get<std::string>();
    const auto& in = header.at("input");
    g.input.shape = {in.at("c").get<int>(), in.at("h").get<int>(),
                     in.at("w").get<int>()};
    g.input.bit_width = in.at("bits").get<int>();
    g.input.signedness = in.at("signed").get<bool>() ? Signedness::kSigned
                                                     : Signedness::kUnsigned;
    g.input.scale = in.at("scale").get<double>();
    const auto& md = header.at("metadata");
    g.metadata.synthetic = md.at("synthetic").get<bool>();
    g.metadata.seed = md.at("seed").get<std::uint64_t>();
    g.metadata.sparsity_bias = md.at("sparsity_bias").get<double>();
    g.metadata.parameter_count = md.at("parameter_count").get<std::int64_t>();

    std::size_t payload_size = 0;
    std::vector<detail::LayerShapes> shapes;
    for (const auto& lj : header.at("layers")) {
      LayerSpec s;
      s.kind = layer_kind_from_string(lj.at("kind").get<std::string>());
      s.kernel = lj.at("kernel").get<int>();
      s.stride = lj.at("stride").get<int>();
      s.same_padding = lj.at("same_padding").get<bool>();
      s.in_channels = lj.at("in").get<int>();
      s.out_channels = lj.at("out").get<int>();
      s.activation = activation_from_string(lj.at("activation").get<std::string>());
      s.out_bits = lj.at("out_bits").get<int>();
      s.out_scale = lj.at("out_scale").get<double>();
      s.dw_out_scale = lj.at("dw_out_scale").get<double>();
      const detail::LayerShapes sh =
          detail::shapes_for(s, lj.at("has_bias").get<bool>());
      s.weights.bit_width = lj.at("w_bits").get<int>();
      s.weights.scale = lj.at("w_scale").get<double>();
      s.pw_weights.bit_width = lj.at("pw_bits").get<int>();
      s.pw_weights.scale = lj.at("pw_scale").get<double>();
      s.bias.bit_width = lj.at("bias_bits").get<int>();
      s.bias.scale = lj.at("bias_scale").get<double>();
      payload_size += static_cast<std::size_t>(sh.weights.size()) +
                      static_cast<std::size_t>(sh.pw.size()) +
                      static_cast<std::size_t>(sh.bias.size());
      shapes.push_back(sh);
      g.layers.push_back(std::move(s));
    }

    const std::size_t payload_avail = bytes.size() - 10 - header_len - 4;
    if (payload_avail < payload_size)
      fail(ErrorCategory::truncated,
           "payload truncated: need " + std::to_string(payload_size) +
               " bytes, have " + std::to_string(payload_avail));
    if (payload_avail > payload_size)
      fail(ErrorCategory::format, "trailing bytes after payload");

    const std::uint32_t stored_crc = detail::get_u32(p + bytes.size() - 4);
    const std::uint32_t actual_crc = crc32(p, bytes.size() - 4);
    if (stored_crc != actual_crc)
      fail(ErrorCategory::checksum, "checksum mismatch");

    std::size_t pos = 10 + header_len;
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
      LayerSpec& s = g.layers[i];
      const detail::LayerShapes& sh = shapes[i];
      s.weights = detail::read_tensor(p, pos, sh.weights, s.weights.bit_width,
                                      s.weights.scale);
      s.pw_weights =
          detail::read_tensor(p, pos, sh.pw, s.pw_weights.bit_width,
                              s.pw_weights.scale);
      s.bias = detail::read_tensor(p, pos, sh.bias, s.bias.bit_width, s.bias.scale);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::format, std::string("malformed header field: ") + e.what());
  }

  validate_graph(g);
  return g;
}

inline void save_model(const ModelGraph& g, const std::string& path) {
  write_binary_file(path, serialize_model(g));
}

inline ModelGraph load_model(const std::string& path) {
  return deserialize_model(read_binary_file(path));
}

}  // namespace shipgate
