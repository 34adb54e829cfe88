// Copyright 2026 The splab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "splab/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <unistd.h>

#include "json.hpp"

namespace splab {

namespace {

constexpr char kCheckpointMagic[4] = {'S', 'P', 'L', 'B'};
constexpr char kDumpMagic[4] = {'S', 'P', 'A', 'C'};
constexpr std::uint32_t kKindToy = 0;
constexpr std::uint32_t kKindSae = 1;
constexpr std::uint32_t kVariantTopK = 0;
constexpr std::uint32_t kVariantL1 = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }
  std::size_t size() const { return out_.size(); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw CorruptFileError("truncated file");
  }
  void magic(const char (&expect)[4], const char* what) {
    need(4);
    if (std::memcmp(in_.data() + pos_, expect, 4) != 0)
      throw CorruptFileError(std::string("bad magic: not a ") + what);
    pos_ += 4;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void read_f64s(Reader& r, std::span<double> out) {
  for (auto& v : out) v = r.f64();
}

// Guards size arithmetic against absurd headers before allocating.
std::uint64_t checked_count(std::uint64_t a, std::uint64_t b, std::uint64_t limit) {
  if (a != 0 && b > limit / a) throw CorruptFileError("header dimensions overflow");
  return a * b;
}

void check_version(std::uint32_t got, std::uint32_t supported, const char* what) {
  if (got != supported)
    throw UnsupportedVersionError(std::string("unsupported ") + what + " version " +
                                  std::to_string(got) + " (supported: " +
                                  std::to_string(supported) + ")");
}

void finish_with_payload(Writer& w, std::size_t payload_start) {
  auto& buf = w.buffer();
  const std::uint32_t crc =
      crc32(std::span<const std::uint8_t>(buf.data() + payload_start, buf.size() - payload_start));
  w.u32(crc);
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    c = ::crc32(c, bytes.data() + off, chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(c);
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::vector<std::uint8_t> encode_checkpoint(const ToyModel& model) {
  Writer w;
  w.bytes(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(kKindToy);
  w.u64(model.n_features());
  w.u64(model.n_hidden());
  w.u64(8 * (model.W.size() + model.b.size()));
  const std::size_t start = w.size();
  w.f64s(model.W.span());
  w.f64s(model.b.span());
  finish_with_payload(w, start);
  return std::move(w.buffer());
}

std::vector<std::uint8_t> encode_checkpoint(const SaeModel& sae) {
  Writer w;
  w.bytes(kCheckpointMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(kKindSae);
  w.u64(sae.input_dim);
  w.u64(sae.dict_size);
  if (const auto* t = std::get_if<TopKParams>(&sae.variant)) {
    w.u32(kVariantTopK);
    w.u64(t->k);
    w.u64(t->k_aux);
    w.f64(t->aux_weight);
  } else {
    w.u32(kVariantL1);
    w.f64(std::get<L1Params>(sae.variant).lambda);
    w.u64(0);
    w.u64(0);
  }
  w.u64(8 * (sae.W_enc.size() + sae.b_enc.size() + sae.W_dec.size() + sae.b_pre.size()));
  const std::size_t start = w.size();
  w.f64s(sae.W_enc.span());
  w.f64s(sae.b_enc.span());
  w.f64s(sae.W_dec.span());
  w.f64s(sae.b_pre.span());
  finish_with_payload(w, start);
  return std::move(w.buffer());
}

AnyModel decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.magic(kCheckpointMagic, "splab checkpoint");
  check_version(r.u32(), kCheckpointVersion, "checkpoint");
  const std::uint32_t kind = r.u32();
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 40;

  auto read_payload = [&](std::uint64_t expected_values) {
    const std::uint64_t len = r.u64();
    if (len != 8 * expected_values) throw CorruptFileError("payload length does not match header");
    auto payload = r.take(static_cast<std::size_t>(len));
    const std::uint32_t stored = r.u32();
    if (stored != crc32(payload)) throw CorruptFileError("checkpoint CRC mismatch");
    if (r.remaining() != 0) throw CorruptFileError("trailing bytes after checkpoint");
    return Reader(payload);
  };

  if (kind == kKindToy) {
    const std::uint64_t n = r.u64();
    const std::uint64_t m = r.u64();
    const std::uint64_t wsize = checked_count(n, m, kLimit);
    Reader p = read_payload(wsize + n);
    ToyModel model(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
    read_f64s(p, model.W.span());
    read_f64s(p, model.b.span());
    return model;
  }
  if (kind == kKindSae) {
    const std::uint64_t d = r.u64();
    const std::uint64_t D = r.u64();
    const std::uint32_t variant = r.u32();
    SaeVariant v;
    if (variant == kVariantTopK) {
      TopKParams t;
      t.k = static_cast<std::size_t>(r.u64());
      t.k_aux = static_cast<std::size_t>(r.u64());
      t.aux_weight = r.f64();
      v = t;
    } else if (variant == kVariantL1) {
      L1Params l;
      l.lambda = r.f64();
      r.u64();
      r.u64();
      v = l;
    } else {
      throw CorruptFileError("unknown SAE variant tag " + std::to_string(variant));
    }
    const std::uint64_t wsize = checked_count(d, D, kLimit);
    Reader p = read_payload(2 * wsize + D + d);
    SaeModel sae;
    try {
      sae = make_sae(static_cast<std::size_t>(d), static_cast<std::size_t>(D), v);
    } catch (const ContractError& e) {
      throw CorruptFileError(std::string("invalid SAE header: ") + e.what());
    }
    read_f64s(p, sae.W_enc.span());
    read_f64s(p, sae.b_enc.span());
    read_f64s(p, sae.W_dec.span());
    read_f64s(p, sae.b_pre.span());
    return sae;
  }
  throw CorruptFileError("unknown checkpoint kind " + std::to_string(kind));
}

void save_checkpoint(const std::filesystem::path& path, const ToyModel& model) {
  write_file_atomic(path, encode_checkpoint(model));
}

void save_checkpoint(const std::filesystem::path& path, const SaeModel& sae) {
  write_file_atomic(path, encode_checkpoint(sae));
}

AnyModel load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

ToyModel load_toy_checkpoint(const std::filesystem::path& path) {
  AnyModel m = load_checkpoint(path);
  if (auto* t = std::get_if<ToyModel>(&m)) return std::move(*t);
  throw ContractError(path.string() + " holds an SAE checkpoint, expected a toy model");
}

SaeModel load_sae_checkpoint(const std::filesystem::path& path) {
  AnyModel m = load_checkpoint(path);
  if (auto* s = std::get_if<SaeModel>(&m)) return std::move(*s);
  throw ContractError(path.string() + " holds a toy-model checkpoint, expected an SAE");
}

std::vector<std::uint8_t> encode_activation_dump(const ActivationDataset& ds) {
  Writer w;
  w.bytes(kDumpMagic, 4);
  w.u32(kActivationDumpVersion);
  w.u64(ds.n_samples());
  w.u64(ds.dim());
  const std::size_t start = w.size();
  for (double v : ds.data.span()) w.f32(static_cast<float>(v));
  finish_with_payload(w, start);
  return std::move(w.buffer());
}

ActivationDataset decode_activation_dump(std::span<const std::uint8_t> bytes,
                                         std::string provenance) {
  Reader r(bytes);
  r.magic(kDumpMagic, "splab activation dump");
  check_version(r.u32(), kActivationDumpVersion, "activation dump");
  const std::uint64_t n = r.u64();
  const std::uint64_t d = r.u64();
  if (n == 0) throw EmptyDatasetError("activation dump holds zero samples");
  if (d == 0) throw CorruptFileError("activation dump has zero dimensions");
  const std::uint64_t count = checked_count(n, d, std::uint64_t{1} << 40);
  auto payload = r.take(static_cast<std::size_t>(4 * count));
  const std::uint32_t stored = r.u32();
  if (stored != crc32(payload)) throw CorruptFileError("activation dump CRC mismatch");
  if (r.remaining() != 0) throw CorruptFileError("trailing bytes after activation dump");
  Reader p(payload);
  ActivationDataset ds{Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d)),
                       std::nullopt, std::move(provenance)};
  for (auto& v : ds.data.span()) {
    v = static_cast<double>(p.f32());
    if (!std::isfinite(v)) throw CorruptFileError("activation dump contains non-finite values");
  }
  return ds;
}

void write_activation_dump(const std::filesystem::path& path, const ActivationDataset& ds) {
  write_file_atomic(path, encode_activation_dump(ds));
}

ActivationDataset read_activation_dump(const std::filesystem::path& path) {
  return decode_activation_dump(read_file(path), "dump:" + path.filename().string());
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string graph_to_json(const InterferenceGraph& graph) {
  nlohmann::ordered_json j;
  j["n_features"] = graph.n_features;
  auto nodes = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < graph.nodes.size(); ++a) {
    nlohmann::ordered_json node;
    node["id"] = graph.nodes[a].id;
    node["norm2"] = graph.nodes[a].norm2;
    if (graph.highlight)
      node["highlight"] = (*graph.highlight)[a];
    else
      node["highlight"] = nullptr;
    nodes.push_back(std::move(node));
  }
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : graph.edges) edges.push_back({{"i", e.i}, {"j", e.j}, {"w", e.weight}});
  j["nodes"] = std::move(nodes);
  j["edges"] = std::move(edges);
  return j.dump(2);
}

InterferenceGraph graph_from_json(std::string_view text) {
  InterferenceGraph g;
  try {
    const auto j = nlohmann::json::parse(text);
    g.n_features = j.at("n_features").get<std::size_t>();
    bool any_highlight = false, all_highlight = true;
    std::vector<double> overlay;
    for (const auto& node : j.at("nodes")) {
      g.nodes.push_back({node.at("id").get<std::size_t>(), node.at("norm2").get<double>()});
      if (node.contains("highlight") && !node.at("highlight").is_null()) {
        any_highlight = true;
        overlay.push_back(node.at("highlight").get<double>());
      } else {
        all_highlight = false;
      }
    }
    if (any_highlight && !all_highlight)
      throw CorruptFileError("graph JSON: highlight must be present on all nodes or none");
    if (any_highlight) g.highlight = std::move(overlay);
    for (const auto& e : j.at("edges"))
      g.edges.push_back({e.at("i").get<std::size_t>(), e.at("j").get<std::size_t>(),
                         e.at("w").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError(std::string("graph JSON: ") + e.what());
  }
  return g;
}

std::string graph_to_dot(const InterferenceGraph& graph, std::string_view name) {
  std::ostringstream out;
  out << "graph \"" << name << "\" {\n";
  out << "  node [shape=circle, style=filled, fontname=\"Helvetica\"];\n";
  double max_w = 0.0;
  for (const auto& e : graph.edges) max_w = std::max(max_w, e.weight);
  std::vector<double> overlay_by_id(graph.n_features, 0.0);
  for (std::size_t a = 0; a < graph.nodes.size(); ++a) {
    const double h = graph.highlight ? (*graph.highlight)[a] : 0.0;
    overlay_by_id[graph.nodes[a].id] = h;
    // White → orange as the overlay goes 0 → 1.
    const int g = static_cast<int>(255 - h * (255 - 165));
    const int b = static_cast<int>(255 - h * 255);
    char fill[8];
    std::snprintf(fill, sizeof(fill), "#ff%02x%02x", g, b);
    out << "  " << graph.nodes[a].id << " [label=\"" << graph.nodes[a].id << "\", fillcolor=\""
        << fill << "\", norm2=" << format_double(graph.nodes[a].norm2) << "];\n";
  }
  for (const auto& e : graph.edges) {
    const double pen = max_w > 0.0 ? 0.5 + 4.5 * e.weight / max_w : 1.0;
    const double h = std::max(overlay_by_id[e.i], overlay_by_id[e.j]);
    const char* color = h > 0.5 ? "#ff8c00" : (h > 0.0 ? "#ffc080" : "#808080");
    out << "  " << e.i << " -- " << e.j << " [penwidth=" << format_double(pen)
        << ", weight=" << format_double(e.weight) << ", color=\"" << color << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

std::string matrix_to_csv(const Matrix& m) {
  std::ostringstream out;
  out << "row";
  for (std::size_t c = 0; c < m.cols(); ++c) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << r;
    for (std::size_t c = 0; c < m.cols(); ++c) out << ',' << format_double(m(r, c));
    out << '\n';
  }
  return out.str();
}

}  // namespace splab
