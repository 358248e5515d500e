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

#include "fergrad/data.hpp"

#include <jpeglib.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace fergrad {
namespace {

std::string lower_trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  check(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

void check_header(const std::string& line, std::span<const std::string_view> expected,
                  const std::string& file) {
  const auto cols = split_csv(line);
  if (cols.size() != expected.size())
    fail(ErrorCode::kFormat, file + " header: expected " + std::to_string(expected.size()) +
                                 " columns, found " + std::to_string(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i)
    if (lower_trim(cols[i]) != lower_trim(expected[i]))
      fail(ErrorCode::kFormat, file + " header: column " + std::to_string(i + 1) + " is '" +
                                   cols[i] + "', expected '" + std::string(expected[i]) + "'");
}

Usage parse_usage(const std::string& s, const std::string& row) {
  const auto v = lower_trim(s);
  if (v == "training") return Usage::kTraining;
  if (v == "publictest") return Usage::kPublicTest;
  if (v == "privatetest") return Usage::kPrivateTest;
  fail(ErrorCode::kFormat, row + ": unknown usage '" + s + "'");
}

int kdef_emotion(std::string_view code) {
  static const std::map<std::string_view, int> table = {
      {"NE", 0}, {"AN", 1}, {"DI", 2}, {"AF", 3}, {"HA", 4}, {"SA", 5}, {"SU", 6}};
  const auto it = table.find(code);
  return it == table.end() ? -1 : it->second;
}

// Reads the next whitespace/comment-delimited integer of a PNM header or body.
std::int64_t pnm_int(const std::string& buf, std::size_t& pos, const std::string& file) {
  for (;;) {
    while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    if (pos < buf.size() && buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(buf.data() + pos, buf.data() + buf.size(), v);
  check(ec == std::errc() && v >= 0, ErrorCode::kFormat, file + ": malformed PNM data");
  pos = static_cast<std::size_t>(p - buf.data());
  return v;
}

Image read_pnm(const std::string& buf, const std::string& file) {
  const char kind = buf[1];
  std::size_t pos = 2;
  const auto w = pnm_int(buf, pos, file);
  const auto h = pnm_int(buf, pos, file);
  const auto maxval = pnm_int(buf, pos, file);
  check(w > 0 && h > 0 && maxval > 0 && maxval < 65536, ErrorCode::kFormat,
        file + ": bad PNM dimensions");
  const bool color = kind == '3' || kind == '6';
  const bool binary = kind == '5' || kind == '6';
  const int bytes = maxval > 255 ? 2 : 1;
  const std::int64_t n = w * h * (color ? 3 : 1);
  std::vector<double> vals(static_cast<std::size_t>(n));
  if (binary) {
    ++pos;  // single whitespace after maxval
    check(pos + static_cast<std::size_t>(n * bytes) <= buf.size(), ErrorCode::kFormat,
          file + ": truncated PNM data");
    for (std::int64_t i = 0; i < n; ++i) {
      const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + pos + i * bytes);
      vals[i] = bytes == 2 ? (p[0] << 8 | p[1]) : p[0];
    }
  } else {
    for (auto& v : vals) v = static_cast<double>(pnm_int(buf, pos, file));
  }
  Image img(h, w, 1);
  const double scale = 255.0 / static_cast<double>(maxval);
  for (std::int64_t i = 0; i < w * h; ++i) {
    const double v = color ? 0.299 * vals[3 * i] + 0.587 * vals[3 * i + 1] + 0.114 * vals[3 * i + 2]
                           : vals[i];
    img.data[i] = std::clamp(v * scale, 0.0, 255.0);
  }
  return img;
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_fail(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Image read_jpeg(const std::string& buf, const std::string& file) {
  jpeg_decompress_struct cinfo{};
  JpegError err{};
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_fail;
  std::vector<unsigned char> pixels;
  std::int64_t w = 0, h = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorCode::kFormat, file + ": JPEG decode failed: " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(buf.data()),
               static_cast<unsigned long>(buf.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_GRAYSCALE;
  jpeg_start_decompress(&cinfo);
  w = cinfo.output_width;
  h = cinfo.output_height;
  pixels.resize(static_cast<std::size_t>(w * h));
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * w;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  Image img(h, w, 1);
  for (std::int64_t i = 0; i < w * h; ++i) img.data[i] = pixels[i];
  return img;
}

std::vector<Sample> make_split(std::int64_t per_class, std::uint64_t seed, const std::string& tag,
                               double (*pixel)(int, std::int64_t, std::int64_t, const double*),
                               void (*draw)(Rng&, double*), double noise) {
  std::vector<Sample> out;
  Rng rng(seed);
  char id[48];
  for (std::int64_t i = 0; i < per_class; ++i)
    for (int k = 0; k < 8; ++k) {
      double params[4];
      draw(rng, params);
      Image img(kInputSize, kInputSize, 1);
      for (std::int64_t y = 0; y < kInputSize; ++y)
        for (std::int64_t x = 0; x < kInputSize; ++x) {
          const double v = pixel(k, y, x, params) + noise * standard_normal(rng);
          img.at(y, x) = std::clamp(std::round(v), 0.0, 255.0);
        }
      std::snprintf(id, sizeof id, "%s-%05zu", tag.c_str(), out.size());
      out.push_back({std::move(img), k, id});
    }
  return out;
}

double bar_pixel(int k, std::int64_t y, std::int64_t x, const double* p) {
  const double theta = k * std::numbers::pi / 8.0;
  const double u = (x - 31.5) * std::cos(theta) + (y - 31.5) * std::sin(theta);
  return 128.0 + (std::sin(2.0 * std::numbers::pi * u / p[0] + p[1]) >= 0.0 ? 80.0 : -80.0);
}

void bar_draw(Rng& rng, double* p) {
  p[0] = uniform(rng, 8.0, 14.0);
  p[1] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
}

double ramp_pixel(int k, std::int64_t y, std::int64_t x, const double* p) {
  const double theta = k * std::numbers::pi / 4.0;
  const double u = (x - 31.5) * std::cos(theta) + (y - 31.5) * std::sin(theta);
  const double phase = u / p[0] + p[1];
  return 128.0 + p[2] + 70.0 * (phase - std::floor(phase) - 0.5);
}

void ramp_draw(Rng& rng, double* p) {
  p[0] = uniform(rng, 8.0, 14.0);
  p[1] = uniform01(rng);
  p[2] = uniform(rng, -30.0, 30.0);
}

DatasetSplit synthetic(std::int64_t tr, std::int64_t va, std::int64_t te, std::uint64_t seed,
                       const std::string& name,
                       double (*pixel)(int, std::int64_t, std::int64_t, const double*),
                       void (*draw)(Rng&, double*), double noise) {
  DatasetSplit s;
  s.num_classes = 8;
  s.train = make_split(tr, seed * 3 + 0, name + "-train", pixel, draw, noise);
  s.validation = make_split(va, seed * 3 + 1, name + "-val", pixel, draw, noise);
  s.test = make_split(te, seed * 3 + 2, name + "-test", pixel, draw, noise);
  s.provenance = "synthetic " + name + " seed " + std::to_string(seed);
  return s;
}

}  // namespace

std::string_view usage_name(Usage u) {
  switch (u) {
    case Usage::kTraining: return "Training";
    case Usage::kPublicTest: return "PublicTest";
    case Usage::kPrivateTest: return "PrivateTest";
  }
  return "?";
}

std::optional<int> majority_vote(const VoteRecord& rec) {
  const int m = *std::max_element(rec.votes.begin(), rec.votes.end());
  if (rec.votes[8] == m || rec.votes[9] == m) return std::nullopt;
  for (int i = 0; i < 8; ++i)
    if (rec.votes[i] == m) return i;
  return std::nullopt;
}

Image parse_pixels(std::string_view field, std::int64_t h, std::int64_t w, std::string_view row) {
  check(h > 0 && w > 0, ErrorCode::kInvalidArgument, "parse_pixels: size must be positive");
  const std::string where = row.empty() ? "pixels" : std::string(row);
  Image img(h, w, 1);
  std::int64_t n = 0;
  const char* p = field.data();
  const char* end = p + field.size();
  for (;;) {
    while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
    if (p == end) break;
    const char* tok = p;
    while (p < end && !std::isspace(static_cast<unsigned char>(*p))) ++p;
    int v = 0;
    const auto [q, ec] = std::from_chars(tok, p, v);
    if (ec != std::errc() || q != p)
      fail(ErrorCode::kFormat, where + ": non-numeric token '" + std::string(tok, p) + "'");
    if (v < 0 || v > 255)
      fail(ErrorCode::kFormat, where + ": value " + std::to_string(v) + " outside [0, 255]");
    if (n < h * w) img.data[n] = v;
    ++n;
  }
  if (n != h * w)
    fail(ErrorCode::kFormat, where + ": expected " + std::to_string(h * w) + " values, found " +
                                 std::to_string(n));
  return img;
}

std::vector<std::int64_t> DatasetSplit::class_counts(const std::vector<Sample>& part) const {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (const auto& s : part) ++counts.at(static_cast<std::size_t>(s.label));
  return counts;
}

DatasetSplit load_ferplus(const std::filesystem::path& pixels_csv,
                          const std::filesystem::path& votes_csv) {
  static constexpr std::array<std::string_view, 3> kPixelHeader = {"emotion", "pixels", "Usage"};
  std::vector<std::string_view> vote_header = {"usage", "Image name"};
  vote_header.insert(vote_header.end(), kVoteColumns.begin(), kVoteColumns.end());

  const auto pixel_lines = read_lines(pixels_csv);
  const auto vote_lines = read_lines(votes_csv);
  check(!pixel_lines.empty(), ErrorCode::kFormat, pixels_csv.string() + ": missing header");
  check(!vote_lines.empty(), ErrorCode::kFormat, votes_csv.string() + ": missing header");
  check_header(pixel_lines[0], kPixelHeader, pixels_csv.filename().string());
  check_header(vote_lines[0], vote_header, votes_csv.filename().string());
  if (pixel_lines.size() != vote_lines.size())
    fail(ErrorCode::kFormat, "row-count mismatch: " + std::to_string(pixel_lines.size() - 1) +
                                 " pixel rows vs " + std::to_string(vote_lines.size() - 1) +
                                 " vote rows");

  DatasetSplit out;
  out.num_classes = kFerplusClasses;
  for (std::size_t i = 1; i < pixel_lines.size(); ++i) {
    const std::string row = "row " + std::to_string(i);
    const auto px = split_csv(pixel_lines[i]);
    const auto vt = split_csv(vote_lines[i]);
    check(px.size() == 3, ErrorCode::kFormat, pixels_csv.filename().string() + " " + row +
                                                  ": expected 3 fields");
    check(vt.size() == 12, ErrorCode::kFormat, votes_csv.filename().string() + " " + row +
                                                   ": expected 12 fields");
    VoteRecord rec;
    rec.usage = parse_usage(vt[0], row);
    if (parse_usage(px[2], row) != rec.usage)
      fail(ErrorCode::kFormat, row + ": usage differs between pixel and vote files");
    rec.image_id = vt[1].empty() ? "row" + std::to_string(i) : vt[1];
    int sum = 0;
    for (int c = 0; c < 10; ++c) {
      int v = -1;
      const auto& tok = vt[2 + c];
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size() || v < 0)
        fail(ErrorCode::kFormat, row + ": bad vote count '" + tok + "' in column " +
                                     std::string(kVoteColumns[c]));
      rec.votes[c] = v;
      sum += v;
    }
    if (sum != 10) ++out.vote_warnings;
    auto image = parse_pixels(px[1], 48, 48, row);
    const auto label = majority_vote(rec);
    if (!label) {
      ++out.rejected;
      continue;
    }
    Sample s{std::move(image), *label, rec.image_id};
    switch (rec.usage) {
      case Usage::kTraining: out.train.push_back(std::move(s)); break;
      case Usage::kPublicTest: out.validation.push_back(std::move(s)); break;
      case Usage::kPrivateTest: out.test.push_back(std::move(s)); break;
    }
  }
  out.provenance = "FERplus: " + pixels_csv.filename().string() + " + " +
                   votes_csv.filename().string() + ", usage column split, " +
                   std::to_string(out.rejected) + " rejected by majority vote";
  return out;
}

std::optional<KdefName> parse_kdef_stem(std::string_view stem) {
  if (stem.size() != 7 && stem.size() != 8) return std::nullopt;
  const auto upper = [](char c) { return c >= 'A' && c <= 'Z'; };
  const auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!upper(stem[0]) || (stem[1] != 'F' && stem[1] != 'M') || !digit(stem[2]) || !digit(stem[3]))
    return std::nullopt;
  const int label = kdef_emotion(stem.substr(4, 2));
  if (label < 0) return std::nullopt;
  const std::string angle(stem.substr(6));
  if (angle != "S" && angle != "HL" && angle != "HR" && angle != "FL" && angle != "FR")
    return std::nullopt;
  return KdefName{std::string(stem.substr(1, 3)), label, angle};
}

DatasetSplit load_kdef(const std::filesystem::path& root, const KdefOptions& opts) {
  namespace fs = std::filesystem;
  check(fs::is_directory(root), ErrorCode::kIo, "load_kdef: not a directory: " + root.string());
  DatasetSplit out;
  out.num_classes = kKdefClasses;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());

  static const std::set<std::string> kExt = {".jpg", ".jpeg", ".pgm", ".ppm", ".pnm"};
  std::map<std::string, std::vector<Sample>> by_subject;
  for (const auto& f : files) {
    if (!kExt.count(lower_trim(f.extension().string()))) continue;
    const auto stem = f.stem().string();
    std::string upper_stem = stem;
    for (auto& c : upper_stem) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const auto name = parse_kdef_stem(upper_stem);
    if (!name) {
      ++out.skipped;
      continue;
    }
    if (opts.straight_only && name->angle != "S") continue;
    auto img = resize_bilinear(read_image_gray(f), opts.size, opts.size);
    by_subject[name->subject].push_back({std::move(img), name->label, stem});
  }

  std::vector<std::string> subjects;
  for (const auto& [s, v] : by_subject) subjects.push_back(s);
  std::vector<std::size_t> order(subjects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(opts.seed);
  shuffle_indices(order, rng);
  const auto n = subjects.size();
  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < n_train ? out.train : i < n_train + n_val ? out.validation : out.test;
    for (auto& s : by_subject[subjects[order[i]]]) dst.push_back(std::move(s));
  }
  out.provenance = "KDEF: " + root.string() + (opts.straight_only ? ", straight views" : ", all views") +
                   ", subject split 80/10/10 seed " + std::to_string(opts.seed) + ", " +
                   std::to_string(out.skipped) + " files skipped";
  return out;
}

Image read_image_gray(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  check(static_cast<bool>(in), ErrorCode::kIo, "cannot open image " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto file = path.string();
  if (buf.size() >= 2 && buf[0] == 'P' && buf[1] >= '2' && buf[1] <= '6' && buf[1] != '4')
    return read_pnm(buf, file);
  if (buf.size() >= 3 && static_cast<unsigned char>(buf[0]) == 0xFF &&
      static_cast<unsigned char>(buf[1]) == 0xD8)
    return read_jpeg(buf, file);
  fail(ErrorCode::kFormat, file + ": unsupported image format");
}

void write_pgm(const Image& img, const std::filesystem::path& path) {
  check(img.channels() == 1, ErrorCode::kInvalidArgument, "write_pgm: single-channel images only");
  std::ofstream out(path, std::ios::binary);
  check(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (std::int64_t i = 0; i < img.data.numel(); ++i)
    out.put(static_cast<char>(static_cast<unsigned char>(std::clamp(std::round(img.data[i]), 0.0, 255.0))));
}

std::vector<Image> assemble_variant(const Image& raw, Variant variant, std::int64_t size,
                                    NormalizeMode mode) {
  check(raw.channels() == 1, ErrorCode::kInvalidArgument,
        "assemble_variant: expected a single-channel raw image, got " +
            std::to_string(raw.channels()) + " channels");
  const Image base = raw.height() == size && raw.width() == size
                         ? raw
                         : resize_bilinear(raw, size, size);
  auto norm = [&](const Image& im) { return normalize(im, mode); };
  switch (variant) {
    case Variant::kPlain: return {norm(base)};
    case Variant::kLaplacianConcat: return {norm(concat_channels({base, laplacian(base)}))};
    case Variant::kSobelConcat: {
      auto [gx, gy] = sobel(base);
      return {norm(concat_channels({base, gx, gy}))};
    }
    default: break;
  }
  std::vector<Image> out;
  for (auto s : variant_streams(variant)) {
    switch (s) {
      case StreamInput::kOriginal: out.push_back(norm(base)); break;
      case StreamInput::kLaplacian: out.push_back(norm(laplacian(base))); break;
      case StreamInput::kGradient: {
        auto [gx, gy] = sobel(base);
        out.push_back(norm(gradient_magnitude(gx, gy)));
        break;
      }
    }
  }
  return out;
}

PreparedSet prepare(const std::vector<Sample>& samples, Variant variant, int num_classes,
                    std::int64_t size) {
  PreparedSet set;
  set.num_classes = num_classes;
  if (samples.empty()) return set;
  const auto n = static_cast<std::int64_t>(samples.size());
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    check(s.label >= 0 && s.label < num_classes, ErrorCode::kInvalidArgument,
          "prepare: sample " + s.source_id + " has label " + std::to_string(s.label) +
              " outside [0, " + std::to_string(num_classes) + ")");
    auto streams = assemble_variant(s.image, variant, size);
    if (set.streams.empty())
      for (const auto& im : streams)
        set.streams.emplace_back(Shape{n, size, size, im.channels()});
    for (std::size_t k = 0; k < streams.size(); ++k) {
      const auto per = streams[k].data.numel();
      auto dst = set.streams[k].data().subspan(static_cast<std::size_t>(i * per),
                                               static_cast<std::size_t>(per));
      for (std::int64_t j = 0; j < per; ++j) dst[j] = static_cast<float>(streams[k].data[j]);
    }
    set.labels.push_back(s.label);
  }
  return set;
}

std::vector<Tensor<float>> gather(const PreparedSet& set, std::span<const std::size_t> indices) {
  std::vector<Tensor<float>> out;
  const auto b = static_cast<std::int64_t>(indices.size());
  check(b > 0, ErrorCode::kInvalidArgument, "gather: empty batch");
  for (const auto& src : set.streams) {
    Shape shape = src.shape();
    const auto per = src.numel() / shape[0];
    shape[0] = b;
    Tensor<float> dst(shape);
    for (std::int64_t i = 0; i < b; ++i) {
      const auto idx = static_cast<std::int64_t>(indices[i]);
      check(idx < src.dim(0), ErrorCode::kInvalidArgument, "gather: index out of range");
      std::copy_n(src.data().begin() + idx * per, per, dst.data().begin() + i * per);
    }
    out.push_back(std::move(dst));
  }
  return out;
}

std::vector<int> gather_labels(const PreparedSet& set, std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(set.labels.at(i));
  return out;
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(idx[i - 1], idx[j]);
  }
}

BatchIterator::BatchIterator(std::size_t count, std::size_t batch_size, std::uint64_t seed)
    : count_(count), batch_(batch_size), rng_(seed) {
  check(batch_size >= 1, ErrorCode::kInvalidArgument, "batch size must be at least 1");
  order_.resize(count_);
  pos_ = count_;
}

void BatchIterator::start_epoch() {
  for (std::size_t i = 0; i < count_; ++i) order_[i] = i;
  shuffle_indices(order_, rng_);
  pos_ = 0;
}

bool BatchIterator::next(std::span<const std::size_t>& batch) {
  if (pos_ >= count_) return false;
  const auto len = std::min(batch_, count_ - pos_);
  batch = std::span<const std::size_t>(order_.data() + pos_, len);
  pos_ += len;
  return true;
}

std::size_t BatchIterator::batches_per_epoch() const { return (count_ + batch_ - 1) / batch_; }

BatchIterator shuffle_batches(std::size_t count, std::size_t batch_size, std::uint64_t seed) {
  return BatchIterator(count, batch_size, seed);
}

DatasetSplit synthetic_bars(std::int64_t tr, std::int64_t va, std::int64_t te, std::uint64_t seed) {
  return synthetic(tr, va, te, seed, "bars", bar_pixel, bar_draw, 20.0);
}

DatasetSplit synthetic_ramps(std::int64_t tr, std::int64_t va, std::int64_t te, std::uint64_t seed) {
  return synthetic(tr, va, te, seed, "ramps", ramp_pixel, ramp_draw, 12.0);
}

void write_prepared(const PreparedSet& set, const std::string& split,
                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream man(dir / (split + ".manifest"));
  check(static_cast<bool>(man), ErrorCode::kIo, "cannot write manifest in " + dir.string());
  man << "split " << split << "\ncount " << set.size() << "\nclasses " << set.num_classes
      << "\nstreams " << set.streams.size() << "\n";
  for (std::size_t k = 0; k < set.streams.size(); ++k) {
    const auto file = split + "_s" + std::to_string(k) + ".f32";
    man << "stream " << k << ' ' << file;
    for (auto d : set.streams[k].shape()) man << ' ' << d;
    man << "\n";
    std::ofstream out(dir / file, std::ios::binary);
    check(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + file);
    for (float v : set.streams[k].data()) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      char b[4];
      for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
      out.write(b, 4);
    }
  }
  std::ofstream labels(dir / (split + "_labels.txt"));
  for (auto l : set.labels) labels << l << "\n";
  check(static_cast<bool>(labels) && static_cast<bool>(man), ErrorCode::kIo,
        "write failed in " + dir.string());
}

}  // namespace fergrad
