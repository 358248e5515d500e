// Copyright 2026 The fergrad Authors.
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

#include "fergrad/serialize.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fergrad {
namespace {

constexpr std::string_view kMagic = "fergrad-model";

std::string role_name(ParamRole r) {
  switch (r) {
    case ParamRole::kLedgered: return "ledgered";
    case ParamRole::kAuxiliary: return "auxiliary";
    case ParamRole::kBuffer: return "buffer";
  }
  return "?";
}

LayerKind parse_kind(const std::string& s) {
  for (auto k : {LayerKind::kConv2d, LayerKind::kBottleneck, LayerKind::kAvgPool,
                 LayerKind::kMaxPool, LayerKind::kDense, LayerKind::kStl})
    if (layer_kind_name(k) == s) return k;
  fail(ErrorCode::kFormat, "manifest: unknown layer kind '" + s + "'");
}

Activation parse_act(const std::string& s) {
  for (auto a : {Activation::kNone, Activation::kRelu, Activation::kRelu6})
    if (activation_name(a) == s) return a;
  fail(ErrorCode::kFormat, "manifest: unknown activation '" + s + "'");
}

StreamInput parse_stream(const std::string& s) {
  for (auto v : {StreamInput::kOriginal, StreamInput::kGradient, StreamInput::kLaplacian})
    if (stream_input_name(v) == s) return v;
  fail(ErrorCode::kFormat, "manifest: unknown stream '" + s + "'");
}

// Splits the manifest into lines keyed by their first word; repeated keys keep order.
struct Lines {
  std::vector<std::pair<std::string, std::string>> items;

  const std::string& one(const std::string& key) const {
    const std::string* found = nullptr;
    for (const auto& [k, v] : items)
      if (k == key) {
        if (found) fail(ErrorCode::kFormat, "manifest: duplicate key '" + key + "'");
        found = &v;
      }
    if (!found) fail(ErrorCode::kFormat, "manifest: missing key '" + key + "'");
    return *found;
  }
  std::vector<std::string> all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : items)
      if (k == key) out.push_back(v);
    return out;
  }
};

std::int64_t to_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoll(s, &pos, 0);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::kFormat, "manifest: bad integer for " + what + ": '" + s + "'");
  }
}

std::uint64_t to_u64(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos, 0);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::kFormat, "manifest: bad integer for " + what + ": '" + s + "'");
  }
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

ArchSpec spec_from_lines(const Lines& lines) {
  ArchSpec spec;
  spec.name = lines.one("arch");
  try {
    spec.variant = parse_variant(lines.one("variant"));
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("manifest: ") + e.what());
  }
  for (const auto& w : words(lines.one("input"))) spec.input.push_back(to_int(w, "input"));
  spec.stl_enabled = to_int(lines.one("stl"), "stl") != 0;
  spec.shared_backbone = to_int(lines.one("shared"), "shared") != 0;
  try {
    spec.bn_momentum = std::stod(lines.one("bn_momentum"));
  } catch (const std::logic_error&) {
    fail(ErrorCode::kFormat, "manifest: bad bn_momentum");
  }
  spec.streams.clear();
  for (const auto& w : words(lines.one("streams"))) spec.streams.push_back(parse_stream(w));
  for (const auto& line : lines.all("layer")) {
    auto ws = words(line);
    check(!ws.empty(), ErrorCode::kFormat, "manifest: empty layer line");
    LayerSpec l;
    l.kind = parse_kind(ws[0]);
    for (std::size_t i = 1; i < ws.size(); ++i) {
      const auto eq = ws[i].find('=');
      check(eq != std::string::npos, ErrorCode::kFormat, "manifest: bad layer field " + ws[i]);
      const auto key = ws[i].substr(0, eq);
      const auto val = ws[i].substr(eq + 1);
      if (key == "c") l.c = to_int(val, "c");
      else if (key == "s") l.s = static_cast<int>(to_int(val, "s"));
      else if (key == "t") l.t = static_cast<int>(to_int(val, "t"));
      else if (key == "k") l.k = static_cast<int>(to_int(val, "k"));
      else if (key == "bias") l.bias = to_int(val, "bias") != 0;
      else if (key == "act") l.act = parse_act(val);
      else fail(ErrorCode::kFormat, "manifest: unknown layer field " + key);
    }
    spec.layers.push_back(l);
  }
  return spec;
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

float get_f32(const std::uint8_t* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string spec_to_text(const ArchSpec& spec) {
  std::ostringstream os;
  os << "arch " << spec.name << "\n";
  os << "variant " << variant_name(spec.variant) << "\n";
  os << "classes " << spec.num_classes() << "\n";
  os << "input";
  for (auto d : spec.input) os << ' ' << d;
  os << "\nstl " << (spec.stl_enabled ? 1 : 0) << "\n";
  os << "shared " << (spec.shared_backbone ? 1 : 0) << "\n";
  os << "bn_momentum " << fmt17(spec.bn_momentum) << "\n";
  os << "streams";
  for (auto s : spec.streams) os << ' ' << stream_input_name(s);
  os << "\n";
  for (const auto& l : spec.layers)
    os << "layer " << layer_kind_name(l.kind) << " c=" << l.c << " s=" << l.s << " t=" << l.t
       << " k=" << l.k << " bias=" << (l.bias ? 1 : 0) << " act=" << activation_name(l.act)
       << "\n";
  return os.str();
}

SerializedModel serialize(Model<float>& model) {
  SerializedModel out;
  const auto ledger = count_params(model.spec());
  auto state = model.state();
  std::ostringstream os;
  os << kMagic << "\n";
  os << "version " << kFormatVersion << "\n";
  os << spec_to_text(model.spec());
  os << "seed " << model.seed() << "\n";
  os << "ledger_total " << ledger.total << "\n";
  os << "ledger_auxiliary " << ledger.auxiliary << "\n";
  std::size_t offset = 0;
  for (auto& nt : state) {
    os << "tensor " << nt.name << ' ' << role_name(nt.role) << ' ' << offset << ' '
       << nt.tensor.numel();
    for (auto d : nt.tensor.shape()) os << ' ' << d;
    os << "\n";
    for (float v : nt.tensor.data()) put_f32(out.blob, v);
    offset += static_cast<std::size_t>(nt.tensor.numel()) * 4;
  }
  os << "blob_bytes " << out.blob.size() << "\n";
  os << "checksum " << hex64(fnv1a64(out.blob)) << "\n";
  out.manifest = os.str();
  return out;
}

Model<float> deserialize(std::span<const std::uint8_t> blob, std::string_view manifest) {
  Lines lines;
  {
    std::istringstream is{std::string(manifest)};
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (first) {
        check(line == kMagic, ErrorCode::kFormat, "manifest: missing header line");
        first = false;
        continue;
      }
      if (line.empty()) continue;
      const auto sp = line.find(' ');
      lines.items.emplace_back(line.substr(0, sp),
                               sp == std::string::npos ? "" : line.substr(sp + 1));
    }
    check(!first, ErrorCode::kFormat, "manifest: empty");
  }
  const auto version = to_int(lines.one("version"), "version");
  if (version != kFormatVersion)
    fail(ErrorCode::kFormat, "manifest: format version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(kFormatVersion) + ")");

  const auto expected_bytes = to_u64(lines.one("blob_bytes"), "blob_bytes");
  if (expected_bytes != blob.size())
    fail(ErrorCode::kIntegrity, "integrity: blob has " + std::to_string(blob.size()) +
                                    " bytes, manifest declares " +
                                    std::to_string(expected_bytes));
  const auto checksum = to_u64(lines.one("checksum"), "checksum");
  const auto actual = fnv1a64(blob);
  if (checksum != actual)
    fail(ErrorCode::kIntegrity,
         "integrity: checksum mismatch (manifest " + hex64(checksum) + ", blob " + hex64(actual) + ")");

  auto spec = spec_from_lines(lines);
  const auto seed = to_u64(lines.one("seed"), "seed");
  auto model = Model<float>::build(spec, seed);
  const auto ledger_total = to_int(lines.one("ledger_total"), "ledger_total");
  check(ledger_total == count_params(spec).total, ErrorCode::kFormat,
        "manifest: ledger total does not match the recorded spec");

  auto state = model.state();
  const auto entries = lines.all("tensor");
  check(entries.size() == state.size(), ErrorCode::kFormat,
        "manifest: lists " + std::to_string(entries.size()) + " tensors, model has " +
            std::to_string(state.size()));
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto ws = words(entries[i]);
    auto& nt = state[i];
    check(ws.size() >= 4 && ws[0] == nt.name, ErrorCode::kFormat,
          "manifest: tensor entry " + std::to_string(i) + " does not match " + nt.name);
    const auto offset = to_u64(ws[2], "offset");
    const auto count = to_int(ws[3], "count");
    Shape shape;
    for (std::size_t j = 4; j < ws.size(); ++j) shape.push_back(to_int(ws[j], "shape"));
    check(shape == nt.tensor.shape() && count == nt.tensor.numel(), ErrorCode::kFormat,
          "manifest: tensor " + nt.name + " has shape " + shape_str(shape) + ", model expects " +
              shape_str(nt.tensor.shape()));
    check(offset + static_cast<std::uint64_t>(count) * 4 <= blob.size(), ErrorCode::kIntegrity,
          "integrity: tensor " + nt.name + " extends past the blob");
    auto data = nt.tensor.data();
    for (std::int64_t j = 0; j < count; ++j) data[j] = get_f32(blob.data() + offset + 4 * j);
  }
  model.mark_stats_loaded();
  return model;
}

void save_model(Model<float>& model, const std::filesystem::path& stem) {
  auto s = serialize(model);
  auto bin = stem;
  bin += ".bin";
  auto man = stem;
  man += ".manifest";
  std::ofstream b(bin, std::ios::binary);
  check(static_cast<bool>(b), ErrorCode::kIo, "cannot write " + bin.string());
  b.write(reinterpret_cast<const char*>(s.blob.data()), static_cast<std::streamsize>(s.blob.size()));
  std::ofstream m(man);
  check(static_cast<bool>(m), ErrorCode::kIo, "cannot write " + man.string());
  m << s.manifest;
  check(static_cast<bool>(b) && static_cast<bool>(m), ErrorCode::kIo,
        "write failed for " + stem.string());
}

Model<float> load_model(const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".bin";
  auto man = stem;
  man += ".manifest";
  std::ifstream b(bin, std::ios::binary);
  check(static_cast<bool>(b), ErrorCode::kIo, "cannot read " + bin.string());
  std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  std::ifstream m(man);
  check(static_cast<bool>(m), ErrorCode::kIo, "cannot read " + man.string());
  std::stringstream ss;
  ss << m.rdbuf();
  return deserialize(blob, ss.str());
}

}  // namespace fergrad
