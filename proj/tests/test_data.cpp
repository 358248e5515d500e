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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "fergrad/data.hpp"
#include "oracles.hpp"

namespace fergrad {
namespace {

using namespace oracle;

namespace fs = std::filesystem;

VoteRecord votes(std::array<int, 10> v) {
  VoteRecord r;
  r.image_id = "fer0000000.png";
  r.votes = v;
  return r;
}

std::array<int, 10> random_votes(Rng& rng) {
  std::array<int, 10> v{};
  for (int k = 0; k < 10; ++k) ++v[uniform_index(rng, 10)];
  return v;
}

std::string pixel_field(std::int64_t n, int value) {
  std::string s;
  for (std::int64_t i = 0; i < n; ++i) s += (i ? " " : "") + std::to_string(value);
  return s;
}

class TempDir : public ::testing::Test {
 protected:
  fs::path dir;
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("fergrad_data_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }
};

TEST(ParsePixels, ShapesAndErrors) {
  auto img = parse_pixels(pixel_field(2304, 17), 48, 48);
  EXPECT_EQ(img.height(), 48);
  EXPECT_EQ(img.width(), 48);
  EXPECT_EQ(img.channels(), 1);
  auto small = parse_pixels("0 0 0 0", 2, 2);
  for (double v : small.data.data()) EXPECT_EQ(v, 0.0);
  auto order = parse_pixels("1 2 3 4 5 6", 2, 3);
  EXPECT_EQ(order.at(1, 0), 4.0);
  try {
    parse_pixels(pixel_field(2303, 0), 48, 48, "row 12");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 12"), std::string::npos);
  }
  EXPECT_THROW(parse_pixels("0 256 0 0", 2, 2), Error);
  EXPECT_THROW(parse_pixels("0 -1 0 0", 2, 2), Error);
  EXPECT_THROW(parse_pixels("0 x 0 0", 2, 2), Error);
}

TEST(MajorityVote, Examples) {
  EXPECT_EQ(majority_vote(votes({8, 1, 1, 0, 0, 0, 0, 0, 0, 0})), 0);
  EXPECT_EQ(majority_vote(votes({0, 0, 0, 0, 0, 0, 0, 0, 10, 0})), std::nullopt);
  EXPECT_EQ(majority_vote(votes({0, 0, 0, 0, 0, 0, 0, 0, 0, 10})), std::nullopt);
  EXPECT_EQ(majority_vote(votes({0, 0, 4, 0, 4, 0, 0, 0, 2, 0})), 2);
  EXPECT_EQ(majority_vote(votes({0, 0, 0, 0, 0, 0, 0, 5, 5, 0})), std::nullopt);
  EXPECT_EQ(majority_vote(votes({0, 0, 0, 0, 0, 0, 0, 6, 0, 4})), 7);
}

TEST(MajorityVote, MatchesOracle) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    auto v = random_votes(rng);
    ASSERT_EQ(majority_vote(votes(v)), vote_oracle(v));
  }
}

TEST(MajorityVote, PermutationCovariant) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    auto v = random_votes(rng);
    // Skip emotion ties, where the lowest-index rule is not covariant.
    const int m = *std::max_element(v.begin(), v.begin() + 8);
    if (std::count(v.begin(), v.begin() + 8, m) > 1) continue;
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle_indices(perm, rng);
    std::array<int, 10> p = v;
    for (int k = 0; k < 8; ++k) p[perm[k]] = v[k];
    auto a = majority_vote(votes(v)), b = majority_vote(votes(p));
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) {
      ASSERT_EQ(static_cast<int>(perm[*a]), *b);
    }
  }
}

const char* kPixelHeader = "emotion,pixels,Usage\n";
const char* kVoteHeader =
    "usage,Image name,neutral,happiness,surprise,sadness,anger,disgust,fear,contempt,unknown,NF\n";

TEST_F(TempDir, FerplusFixture) {
  std::string px = kPixelHeader, vt = kVoteHeader;
  px += "0," + pixel_field(2304, 10) + ",Training\n";
  px += "3," + pixel_field(2304, 20) + ",PublicTest\n";
  px += "6," + pixel_field(2304, 30) + ",PrivateTest\n";
  vt += "Training,fer0000000.png,0,10,0,0,0,0,0,0,0,0\n";
  vt += "PublicTest,fer0000001.png,0,0,0,0,0,0,0,0,10,0\n";
  vt += "PrivateTest,fer0000002.png,0,0,0,7,0,0,0,0,2,0\n";
  write(dir / "p.csv", px);
  write(dir / "v.csv", vt);
  auto split = load_ferplus(dir / "p.csv", dir / "v.csv");
  EXPECT_EQ(split.num_classes, 8);
  EXPECT_EQ(split.rejected, 1);
  EXPECT_EQ(split.vote_warnings, 1);
  ASSERT_EQ(split.train.size(), 1u);
  EXPECT_EQ(split.validation.size(), 0u);
  ASSERT_EQ(split.test.size(), 1u);
  EXPECT_EQ(split.train[0].label, 1);
  EXPECT_EQ(split.test[0].label, 3);
  EXPECT_EQ(split.train[0].image.height(), 48);
  EXPECT_EQ(split.test[0].image.at(5, 5), 30.0);
  EXPECT_EQ(split.train.size() + split.validation.size() + split.test.size() + split.rejected, 3u);
  EXPECT_FALSE(split.provenance.empty());
}

TEST_F(TempDir, FerplusBadHeaderAndCounts) {
  std::string px = std::string(kPixelHeader) + "0," + pixel_field(2304, 1) + ",Training\n";
  std::string swapped =
      "usage,Image name,happiness,neutral,surprise,sadness,anger,disgust,fear,contempt,unknown,NF\n"
      "Training,a.png,10,0,0,0,0,0,0,0,0,0\n";
  write(dir / "p.csv", px);
  write(dir / "v.csv", swapped);
  try {
    load_ferplus(dir / "p.csv", dir / "v.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
    EXPECT_NE(std::string(e.what()).find("header"), std::string::npos) << e.what();
  }
  write(dir / "v.csv", std::string(kVoteHeader));
  try {
    load_ferplus(dir / "p.csv", dir / "v.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row-count"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_ferplus(dir / "missing.csv", dir / "v.csv"), Error);
}

TEST(Kdef, StemDecoding) {
  auto a = parse_kdef_stem("AF01ANS");
  ASSERT_TRUE(a);
  EXPECT_EQ(a->label, 1);
  EXPECT_EQ(kKdefClassNames[a->label], "anger");
  EXPECT_EQ(a->angle, "S");
  EXPECT_EQ(a->subject, "F01");
  auto b = parse_kdef_stem("BM22SUHL");
  ASSERT_TRUE(b);
  EXPECT_EQ(kKdefClassNames[b->label], "surprise");
  EXPECT_EQ(b->angle, "HL");
  EXPECT_EQ(b->subject, "M22");
  EXPECT_EQ(kKdefClassNames[parse_kdef_stem("AF01AFS")->label], "fear");
  EXPECT_EQ(kKdefClassNames[parse_kdef_stem("AM10NES")->label], "neutral");
  EXPECT_FALSE(parse_kdef_stem("AF01XXS"));
  EXPECT_FALSE(parse_kdef_stem("AF01AN"));
  EXPECT_FALSE(parse_kdef_stem("AF01ANQ"));
  EXPECT_FALSE(parse_kdef_stem("readme"));
}

TEST_F(TempDir, KdefEmptyDirectory) {
  auto split = load_kdef(dir);
  EXPECT_TRUE(split.train.empty());
  EXPECT_TRUE(split.validation.empty());
  EXPECT_TRUE(split.test.empty());
  EXPECT_EQ(split.skipped, 0);
  EXPECT_EQ(split.num_classes, 7);
}

TEST_F(TempDir, KdefSubjectDisjointSplit) {
  const char* codes[] = {"AF", "AN", "DI", "HA", "NE", "SA", "SU"};
  Image img(20, 16, 1);
  for (std::int64_t i = 0; i < img.data.numel(); ++i) img.data[i] = static_cast<double>(i % 256);
  for (int s = 1; s <= 20; ++s)
    for (const char* g : {"F", "M"})
      for (const char* code : codes) {
        char stem[16];
        std::snprintf(stem, sizeof stem, "A%s%02d%sS", g, s, code);
        write_pgm(img, dir / (std::string(stem) + ".pgm"));
      }
  write_pgm(img, dir / "AF01ANHL.pgm");
  write(dir / "notes.pgm", "junk");
  auto split = load_kdef(dir, KdefOptions{true, 5, 64});
  EXPECT_EQ(split.skipped, 1);
  const auto n = split.train.size() + split.validation.size() + split.test.size();
  EXPECT_EQ(n, 20u * 2 * 7);
  std::set<std::string> tr, va, te;
  auto subj = [](const Sample& s) {
    auto name = fs::path(s.source_id).stem().string();
    return parse_kdef_stem(name)->subject;
  };
  for (auto& s : split.train) tr.insert(subj(s));
  for (auto& s : split.validation) va.insert(subj(s));
  for (auto& s : split.test) te.insert(subj(s));
  for (auto& s : tr) EXPECT_FALSE(va.count(s) || te.count(s)) << s;
  for (auto& s : va) EXPECT_FALSE(te.count(s)) << s;
  EXPECT_EQ(tr.size(), 32u);
  EXPECT_EQ(va.size(), 4u);
  EXPECT_EQ(te.size(), 4u);
  EXPECT_EQ(split.train[0].image.height(), 64);

  auto all = load_kdef(dir, KdefOptions{false, 5, 64});
  EXPECT_EQ(all.train.size() + all.validation.size() + all.test.size(), n + 1);
}

TEST(AssembleVariant, ChannelCounts) {
  Image raw(48, 48, 1);
  Rng rng(3);
  for (auto& v : raw.data.data()) v = static_cast<double>(uniform_index(rng, 256));
  auto check = [&](Variant v, std::size_t streams, std::int64_t channels) {
    auto out = assemble_variant(raw, v);
    ASSERT_EQ(out.size(), streams) << variant_name(v);
    for (auto& img : out) {
      EXPECT_EQ(img.height(), 64);
      EXPECT_EQ(img.width(), 64);
      EXPECT_EQ(img.channels(), channels);
      EXPECT_TRUE(img.within_declared_range());
    }
  };
  check(Variant::kPlain, 1, 1);
  check(Variant::kLaplacianConcat, 1, 2);
  check(Variant::kSobelConcat, 1, 3);
  check(Variant::kLaplacianParallel, 2, 1);
  check(Variant::kSobelParallel, 2, 1);
  check(Variant::kTripleStream, 3, 1);
}

TEST(AssembleVariant, NoResizeAtTargetSize) {
  Image raw(64, 64, 1);
  for (std::int64_t i = 0; i < raw.data.numel(); ++i) raw.data[i] = static_cast<double>(i % 251);
  auto out = assemble_variant(raw, Variant::kPlain);
  auto want = normalize(raw, NormalizeMode::kUnit);
  for (std::int64_t i = 0; i < raw.data.numel(); ++i) ASSERT_EQ(out[0].data[i], want.data[i]);
}

TEST(AssembleVariant, RejectsMultiChannel) {
  EXPECT_THROW(assemble_variant(Image(8, 8, 3), Variant::kPlain), Error);
}

TEST(Batches, DeterministicPartition) {
  auto a = shuffle_batches(103, 10, 7), b = shuffle_batches(103, 10, 7);
  EXPECT_EQ(a.batches_per_epoch(), 11u);
  for (int epoch = 0; epoch < 3; ++epoch) {
    a.start_epoch();
    b.start_epoch();
    std::vector<std::size_t> seen;
    std::span<const std::size_t> ba, bb;
    std::size_t batches = 0;
    while (a.next(ba)) {
      ASSERT_TRUE(b.next(bb));
      ASSERT_TRUE(std::equal(ba.begin(), ba.end(), bb.begin(), bb.end()));
      seen.insert(seen.end(), ba.begin(), ba.end());
      ++batches;
    }
    EXPECT_FALSE(b.next(bb));
    EXPECT_EQ(batches, 11u);
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < 103; ++i) ASSERT_EQ(seen[i], i);
  }
}

TEST(Batches, OversizedBatchIsSingle) {
  auto it = shuffle_batches(5, 64, 1);
  it.start_epoch();
  std::span<const std::size_t> b;
  ASSERT_TRUE(it.next(b));
  EXPECT_EQ(b.size(), 5u);
  EXPECT_FALSE(it.next(b));
  EXPECT_THROW(shuffle_batches(5, 0, 1), Error);
}

TEST(Synthetic, SizesLabelsAndDeterminism) {
  auto a = synthetic_bars(3, 2, 1, 11), b = synthetic_bars(3, 2, 1, 11);
  EXPECT_EQ(a.train.size(), 24u);
  EXPECT_EQ(a.validation.size(), 16u);
  EXPECT_EQ(a.test.size(), 8u);
  for (auto c : a.class_counts(a.train)) EXPECT_EQ(c, 3);
  for (std::size_t i = 0; i < a.train.size(); ++i)
    for (std::int64_t j = 0; j < a.train[i].image.data.numel(); j += 97)
      ASSERT_EQ(a.train[i].image.data[j], b.train[i].image.data[j]);
  auto r = synthetic_ramps(2, 1, 1, 3);
  EXPECT_EQ(r.num_classes, 8);
  EXPECT_EQ(r.train[0].image.height(), 64);
}

TEST(Prepare, StacksStreams) {
  auto split = synthetic_bars(2, 0, 0, 4);
  auto set = prepare(split.train, Variant::kTripleStream, split.num_classes);
  ASSERT_EQ(set.streams.size(), 3u);
  EXPECT_EQ(set.streams[0].shape(), (Shape{16, 64, 64, 1}));
  std::vector<std::size_t> idx{3, 0};
  auto rows = gather(set, idx);
  EXPECT_EQ(rows[2].shape(), (Shape{2, 64, 64, 1}));
  EXPECT_EQ(rows[1][5], set.streams[1][3 * 64 * 64 + 5]);
  EXPECT_EQ(gather_labels(set, idx), (std::vector<int>{set.labels[3], set.labels[0]}));
}

TEST_F(TempDir, WritePrepared) {
  auto split = synthetic_bars(1, 0, 0, 4);
  auto set = prepare(split.train, Variant::kSobelConcat, split.num_classes);
  write_prepared(set, "train", dir);
  EXPECT_EQ(fs::file_size(dir / "train_s0.f32"), 8u * 64 * 64 * 3 * 4);
  EXPECT_TRUE(fs::exists(dir / "train_labels.txt"));
  EXPECT_TRUE(fs::exists(dir / "train.manifest"));
}

}  // namespace
}  // namespace fergrad
