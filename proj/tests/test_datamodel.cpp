#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "bcirepair/datamodel.hpp"
#include "bcirepair/decoders.hpp"
#include "helpers.hpp"

using namespace bcirepair;

namespace {

std::vector<Sample> ramp(std::size_t n) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(Sample{i * 3 + 5, {static_cast<double>(i), -static_cast<double>(i)}, Label::discrete(i % 3)});
  return out;
}

std::vector<std::uint64_t> indices(const std::vector<Sample>& s) {
  std::vector<std::uint64_t> out;
  for (const auto& x : s) out.push_back(x.index);
  return out;
}

struct ConstantDecoder {
  Label value;
  std::size_t dim;
  Label predict(const Vector&) const { return value; }
  std::size_t input_dim() const { return dim; }
};

}  // namespace

TEST(LargestRemainder, ExactAndRounded) {
  const std::vector<double> r{6, 2, 1, 1};
  EXPECT_EQ(largest_remainder(1000, r), (std::vector<std::size_t>{600, 200, 100, 100}));
  EXPECT_EQ(largest_remainder(7, std::vector<double>{1, 1, 1}), (std::vector<std::size_t>{3, 2, 2}));
  EXPECT_THROW(largest_remainder(5, std::vector<double>{0, 0}), Error);
}

TEST(Split, SixTwoOneOne) {
  const auto s = ramp(1000);
  const auto sp = split_dataset(s, {6, 2, 1, 1}, 7);
  EXPECT_EQ(sp.train.size(), 600u);
  EXPECT_EQ(sp.observe.size(), 200u);
  EXPECT_EQ(sp.acquire.size(), 100u);
  EXPECT_EQ(sp.test.size(), 100u);
}

TEST(Split, SizesWithinOneOfRatioForOddLengths) {
  for (std::size_t n : {11u, 97u, 1003u, 9999u})
    for (SplitMode mode : {SplitMode::Contiguous, SplitMode::Shuffled}) {
      const auto sp = split_dataset(ramp(n), {6, 2, 1, 1}, n, mode);
      const std::array<std::size_t, 4> got{sp.train.size(), sp.observe.size(), sp.acquire.size(), sp.test.size()};
      const std::array<double, 4> r{0.6, 0.2, 0.1, 0.1};
      for (int p = 0; p < 4; ++p) EXPECT_LE(std::fabs(static_cast<double>(got[p]) - r[p] * n), 1.0) << n << " " << p;
    }
}

TEST(Split, IsAPartitionAndKeepsOrder) {
  const auto s = ramp(537);
  for (SplitMode mode : {SplitMode::Contiguous, SplitMode::Shuffled})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto sp = split_dataset(s, {6, 2, 1, 1}, seed, mode);
      std::multiset<std::uint64_t> all;
      for (const auto* part : {&sp.train, &sp.observe, &sp.acquire, &sp.test}) {
        const auto idx = indices(*part);
        EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
        all.insert(idx.begin(), idx.end());
      }
      EXPECT_EQ(all.size(), s.size());
      EXPECT_EQ(std::set<std::uint64_t>(all.begin(), all.end()).size(), s.size());
    }
}

TEST(Split, Deterministic) {
  const auto s = ramp(300);
  const auto a = split_dataset(s, {6, 2, 1, 1}, 42);
  const auto b = split_dataset(s, {6, 2, 1, 1}, 42);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  const auto c = split_dataset(s, {6, 2, 1, 1}, 43);
  EXPECT_NE(indices(a.test), indices(c.test));
}

TEST(Split, ContiguousPartsAreRotatedRuns) {
  // every part is one run of consecutive positions on the circular timeline
  const auto s = ramp(100);
  const auto sp = split_dataset(s, {6, 2, 1, 1}, 3);
  for (const auto* part : {&sp.train, &sp.observe, &sp.acquire, &sp.test}) {
    std::size_t breaks = 0;
    for (std::size_t i = 1; i < part->size(); ++i) breaks += (*part)[i].index - (*part)[i - 1].index != 3 ? 1 : 0;
    EXPECT_LE(breaks, 1u);
  }
}

TEST(Split, Rejections) {
  EXPECT_THROW(split_dataset(std::vector<Sample>{}, {6, 2, 1, 1}, 0), Error);
  EXPECT_THROW(split_dataset(ramp(10), {1, 0, 0, 0}, 0), Error);
  EXPECT_NO_THROW(split_dataset(ramp(10), {6, 2, 0, 2}, 0));
}

TEST(DiscardBlock, RemovesContiguousFraction) {
  const auto s = ramp(100);
  const auto kept = discard_block(s, 0.2, 5);
  EXPECT_EQ(kept.size(), 80u);
  std::size_t gaps = 0;
  for (std::size_t i = 1; i < kept.size(); ++i) gaps += kept[i].index - kept[i - 1].index != 3 ? 1 : 0;
  EXPECT_LE(gaps, 1u);
  EXPECT_EQ(discard_block(s, 0.0, 5).size(), 100u);
}

TEST(ThinStates, KeepsOtherStatesUntouched) {
  const auto s = ramp(3000);
  const auto t = thin_states(s, {{2, 0.1}}, 9);
  std::array<std::size_t, 3> c{};
  for (const auto& x : t) ++c[x.label.state()];
  EXPECT_EQ(c[0], 1000u);
  EXPECT_EQ(c[1], 1000u);
  EXPECT_NEAR(static_cast<double>(c[2]), 100.0, 30.0);
  EXPECT_EQ(thin_states(s, {{2, 0.1}}, 9), t);
}

TEST(EmbedLags, ConcatenatesHistory) {
  std::vector<Sample> s;
  for (std::size_t i = 0; i < 4; ++i) s.push_back(Sample{i, {double(i)}, Label::continuous({0, 0})});
  const auto e = embed_lags(s, 2);
  EXPECT_EQ(e[0].features, (Vector{0, 0, 0}));
  EXPECT_EQ(e[1].features, (Vector{0, 0, 1}));
  EXPECT_EQ(e[3].features, (Vector{1, 2, 3}));
}

TEST(MakeStream, CardinalityOrderAndTruth) {
  const auto s = ramp(200);
  const ConstantDecoder dec{Label::discrete(1), 2};
  const auto st = make_stream(s, dec);
  ASSERT_EQ(st.size(), 200u);
  for (std::size_t i = 0; i < st.size(); ++i) {
    EXPECT_EQ(st[i].index, s[i].index);
    EXPECT_EQ(st[i].output, Label::discrete(1));
    EXPECT_EQ(*st[i].truth, s[i].label);
  }
}

TEST(MakeStream, DimensionMismatchNamesIndex) {
  auto s = ramp(5);
  s[3].features.push_back(1.0);
  const ConstantDecoder dec{Label::discrete(0), 2};
  try {
    make_stream(s, dec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("index 14"), std::string::npos) << e.what();
  }
}

TEST(Csv, DiscreteRoundTrip) {
  Dataset ds;
  ds.states = {"Rest", "Left"};
  ds.samples = {{0, {0.1, -2.5}, Label::discrete(0)}, {4, {1e-300, 3.0}, Label::discrete(1)}};
  std::stringstream ss;
  write_csv(ss, ds);
  EXPECT_EQ(ss.str().substr(0, 21), "index,f0,f1,label\n0,0");
  const auto back = read_csv(ss, ds.states);
  EXPECT_EQ(back.samples, ds.samples);
}

TEST(Csv, ContinuousRoundTripIsExact) {
  Dataset ds;
  ds.kind = LabelKind::Continuous;
  ds.label_dim = 2;
  ds.samples = {{1, {0.1 + 0.2}, Label::continuous({1.0 / 3.0, -7.25})}};
  std::stringstream ss;
  write_csv(ss, ds);
  const auto back = read_csv(ss);
  EXPECT_EQ(back.kind, LabelKind::Continuous);
  EXPECT_EQ(back.samples, ds.samples);
}

TEST(Csv, ErrorsNameTheLine) {
  {
    std::stringstream ss("index,f0,label\n0,1.0,A\n1,x,B\n");
    EXPECT_THROW(
        {
          try {
            read_csv(ss);
          } catch (const Error& e) {
            EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
            throw;
          }
        },
        Error);
  }
  {
    std::stringstream ss("index,f0,label\n0,1.0,A\n1,2.0,C\n");
    try {
      read_csv(ss, {"A", "B"});
      FAIL();
    } catch (const Error& e) {
      EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
  }
  std::stringstream bad_header("idx,f0,label\n");
  EXPECT_THROW(read_csv(bad_header), Error);
  std::stringstream unordered("index,f0,label\n2,1.0,A\n1,2.0,A\n");
  EXPECT_THROW(read_csv(unordered), Error);
}
