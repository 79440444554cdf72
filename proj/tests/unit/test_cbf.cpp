#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <unordered_set>

#include "dls/cbf.hpp"
#include "dls/error.hpp"

using namespace dls;

namespace {

CBFParams make(std::uint32_t m, std::uint32_t k, std::uint32_t bits = 4) {
  CBFParams p;
  p.m = m;
  p.k_hash = k;
  p.counter_bits = bits;
  return p;
}

bool distinct_positions(const CBFParams& p, RangeLabel l) {
  const auto pos = positions(p, l);
  return std::set<std::uint32_t>(pos.begin(), pos.end()).size() == pos.size();
}

// Two labels sharing at least one counter but not all of them.
std::pair<RangeLabel, RangeLabel> colliding_pair(const CBFParams& p) {
  for (std::uint64_t a = 1;; ++a) {
    if (!distinct_positions(p, RangeLabel{a})) continue;
    const auto pa = positions(p, RangeLabel{a});
    const std::set<std::uint32_t> sa(pa.begin(), pa.end());
    for (std::uint64_t b = a + 1; b < a + 5000; ++b) {
      if (!distinct_positions(p, RangeLabel{b})) continue;
      const auto pb = positions(p, RangeLabel{b});
      std::size_t shared = 0;
      for (auto x : pb) shared += sa.count(x);
      if (shared > 0 && shared < pb.size()) return {RangeLabel{a}, RangeLabel{b}};
    }
  }
}

}  // namespace

TEST(CBFParams, Validation) {
  EXPECT_THROW(make(0, 4).validate(), Error);
  EXPECT_THROW(make(8, 0).validate(), Error);
  EXPECT_THROW(make(8, 17).validate(), Error);
  EXPECT_THROW(make(8, 2, 1).validate(), Error);
  EXPECT_THROW(make(8, 2, 17).validate(), Error);
  EXPECT_NO_THROW(make(1, 16, 16).validate());
  EXPECT_EQ(make(8, 2, 4).max_count(), 15u);
}

TEST(CBFParams, DefaultHashCount) {
  EXPECT_EQ(default_hash_count(1024, 128), 6u);  // 8 ln 2 = 5.5
  EXPECT_EQ(default_hash_count(1024, 1024), 1u);
  EXPECT_EQ(default_hash_count(1u << 20, 1), 16u);
}

TEST(Positions, SingleHashIsFirstBase) {
  const auto p = make(1000, 1);
  for (std::uint64_t v : {0ull, 7ull, 123456789ull}) {
    const auto pos = positions(p, RangeLabel{v});
    ASSERT_EQ(pos.size(), 1u);
    EXPECT_EQ(pos[0], label_hash(v, p.seed_a) % 1000);
  }
}

TEST(Positions, ArithmeticProgressionModM) {
  const auto p = make(13, 3);
  for (std::uint64_t v = 0; v < 50; ++v) {
    const auto pos = positions(p, RangeLabel{v});
    const auto h1 = label_hash(v, p.seed_a) % 13;
    const auto h2 = label_hash(v, p.seed_b) % 13;
    ASSERT_EQ(pos.size(), 3u);
    for (std::uint32_t i = 0; i < 3; ++i) {
      EXPECT_LT(pos[i], 13u);
      EXPECT_EQ(pos[i], (h1 + i * h2) % 13);
    }
  }
}

TEST(Positions, DependOnSeeds) {
  auto a = make(1u << 16, 4);
  auto b = a;
  b.seed_b ^= 1;
  std::size_t differ = 0;
  for (std::uint64_t v = 0; v < 100; ++v) {
    const auto pa = positions(a, RangeLabel{v});
    const auto pb = positions(b, RangeLabel{v});
    differ += !std::equal(pa.begin(), pa.end(), pb.begin());
  }
  EXPECT_GT(differ, 90u);
}

TEST(CBF, AddQueryRemove) {
  CountingBloomFilter f(make(1024, 4));
  const RangeLabel l{42};
  ASSERT_TRUE(distinct_positions(f.params(), l));
  EXPECT_EQ(f.query(l), 0u);
  f.add(l);
  EXPECT_GE(f.query(l), 1u);
  f.add(l);
  EXPECT_EQ(f.query(l), 2u);
  f.add(l);
  EXPECT_EQ(f.query(l), 3u);
  EXPECT_EQ(f.n_inserted(), 3);
  EXPECT_EQ(f.counter_sum(), 12u);
  for (int i = 0; i < 3; ++i) f.remove(l);
  EXPECT_EQ(f.query(l), 0u);
  EXPECT_TRUE(f.empty());
  EXPECT_EQ(f.underflow_events(), 0u);
}

TEST(CBF, SaturationIsSticky) {
  CountingBloomFilter f(make(1024, 4, 4));
  const RangeLabel l{42};
  ASSERT_TRUE(distinct_positions(f.params(), l));
  for (int i = 0; i < 16; ++i) f.add(l);
  for (auto p : positions(f.params(), l)) EXPECT_EQ(f.counter(p), 15u);
  EXPECT_GT(f.saturation_events(), 0u);
  for (int i = 0; i < 16; ++i) f.remove(l);
  for (auto p : positions(f.params(), l)) EXPECT_EQ(f.counter(p), 15u);
  EXPECT_EQ(f.query(l), 15u);
}

TEST(CBF, UnderflowFloorsAtZero) {
  CountingBloomFilter f(make(64, 3));
  f.remove(RangeLabel{5});
  EXPECT_TRUE(f.empty());
  EXPECT_GT(f.underflow_events(), 0u);
}

TEST(CBF, CollisionSurvivesDelete) {
  const auto p = make(32, 3);
  const auto [l1, l2] = colliding_pair(p);
  CountingBloomFilter f(p);
  f.add(l1);
  f.add(l2);
  f.remove(l1);
  EXPECT_GE(f.query(l2), 1u);
  EXPECT_EQ(f.query(l1), 0u);
}

TEST(CBF, InverseLawRandomMultiset) {
  std::mt19937_64 rng(7);
  CountingBloomFilter f(make(4096, 4, 8));
  std::vector<RangeLabel> added;
  for (int i = 0; i < 600; ++i) {
    const RangeLabel l{rng() % 300};
    f.add(l);
    added.push_back(l);
  }
  ASSERT_EQ(f.saturation_events(), 0u);
  std::shuffle(added.begin(), added.end(), rng);
  for (auto l : added) f.remove(l);
  EXPECT_TRUE(f.empty());
  EXPECT_EQ(f.underflow_events(), 0u);
}

// query() never reports less than the live multiplicity while deletes are
// balanced and no counter saturates.
TEST(CBF, MinQueryNeverUnderestimates) {
  std::mt19937_64 rng(11);
  CountingBloomFilter f(make(512, 3, 8));
  std::vector<std::uint32_t> truth(200, 0);
  for (int step = 0; step < 20000; ++step) {
    const auto v = rng() % truth.size();
    if (truth[v] > 0 && rng() % 2) {
      f.remove(RangeLabel{v});
      --truth[v];
    } else if (truth[v] < 10) {
      f.add(RangeLabel{v});
      ++truth[v];
    }
    if (step % 97 == 0) {
      for (std::uint64_t u = 0; u < truth.size(); ++u) ASSERT_GE(f.query(RangeLabel{u}), truth[u]);
    }
  }
  EXPECT_EQ(f.saturation_events(), 0u);
  EXPECT_EQ(f.underflow_events(), 0u);
}

TEST(CBF, CounterSumTracksInserts) {
  std::mt19937_64 rng(3);
  CountingBloomFilter f(make(333, 5, 6));
  for (int i = 0; i < 200; ++i) f.add(RangeLabel{rng()});
  ASSERT_EQ(f.saturation_events(), 0u);
  EXPECT_EQ(f.counter_sum(), 5u * 200u);
}

TEST(CBF, PackedCountersAllWidths) {
  for (std::uint32_t bits = 2; bits <= 16; ++bits) {
    CountingBloomFilter f(make(97, 1, bits));
    // Drive one counter to max and check its neighbours are untouched.
    RangeLabel l{1};
    for (std::uint32_t i = 0; i < f.params().max_count() + 3; ++i) f.add(l);
    const auto p = positions(f.params(), l)[0];
    EXPECT_EQ(f.counter(p), f.params().max_count());
    EXPECT_EQ(f.counter_sum(), f.params().max_count());
  }
}

TEST(CBF, SnapshotRoundTrip) {
  auto p = make(1000, 4, 5);
  p.seed_a = 0x0102030405060708ULL;
  p.seed_b = 0xfffefdfcfbfaf9f8ULL;
  CountingBloomFilter f(p);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) f.add(RangeLabel{rng()});
  const auto bytes = f.serialize();
  EXPECT_EQ(bytes.size(), kParamsHeaderBytes + (1000 * 5 + 7) / 8);
  // Header is big-endian and fixed width.
  EXPECT_EQ(bytes[0], 0x00);
  EXPECT_EQ(bytes[2], 0x03);
  EXPECT_EQ(bytes[3], 0xe8);
  EXPECT_EQ(bytes[5], 4);
  EXPECT_EQ(bytes[7], 5);
  EXPECT_EQ(bytes[8], 0x01);
  EXPECT_EQ(bytes[15], 0x08);
  const auto g = CountingBloomFilter::deserialize(bytes);
  EXPECT_EQ(g.params(), p);
  for (std::size_t i = 0; i < p.m; ++i) ASSERT_EQ(g.counter(i), f.counter(i));
  EXPECT_EQ(g.serialize(), bytes);
}

TEST(CBF, SnapshotRejectsCorruption) {
  CountingBloomFilter f(make(10, 2, 3));
  auto bytes = f.serialize();
  auto shorter = bytes;
  shorter.pop_back();
  EXPECT_THROW(CountingBloomFilter::deserialize(shorter), Error);
  bytes.back() |= 0x01;  // padding bit
  EXPECT_THROW(CountingBloomFilter::deserialize(bytes), Error);
}

TEST(TheoreticalFpr, Examples) {
  EXPECT_EQ(theoretical_fpr_exact(1024, 0, 4), 0.0);
  EXPECT_EQ(theoretical_fpr_approx(1024, 0, 4), 0.0);
  const double direct = std::pow(1.0 - std::pow(7.0 / 8.0, 16.0), 2.0);
  EXPECT_NEAR(theoretical_fpr_exact(8, 8, 2), direct, 1e-12);
  EXPECT_NEAR(theoretical_fpr_exact(8, 8, 2), 0.7785, 1e-3);
  EXPECT_NEAR(theoretical_fpr_approx(8, 8, 2), 0.7476, 1e-4);
  EXPECT_DOUBLE_EQ(theoretical_fpr_exact(1, 1, 1), 1.0);
  EXPECT_THROW(theoretical_fpr_exact(0, 1, 1), Error);
  EXPECT_THROW(theoretical_fpr_exact(8, 1, 0), Error);
  EXPECT_THROW(theoretical_fpr_approx(-1, 1, 1), Error);
}

TEST(TheoreticalFpr, ApproxBelowExactGrid) {
  for (std::int64_t m = 256; m <= 65536; m *= 4) {
    for (std::int64_t n = 1; n <= m; n = n * 3 + 1) {
      for (std::int64_t k = 1; k <= 8; ++k) {
        ASSERT_LE(theoretical_fpr_approx(m, n, k), theoretical_fpr_exact(m, n, k) + 1e-15)
            << m << " " << n << " " << k;
      }
    }
  }
}

TEST(CBF, EmpiricalFprNearTheory) {
  for (double load : {0.1, 0.25, 0.5}) {
    for (std::uint32_t k : {2u, 4u}) {
      const std::uint32_t m = 4096;
      const auto n = static_cast<std::uint32_t>(load * m);
      CountingBloomFilter f(make(m, k));
      std::mt19937_64 rng(k * 1000 + n);
      std::unordered_set<std::uint64_t> in;
      while (in.size() < n) {
        const auto v = rng();
        if (in.insert(v).second) f.add(RangeLabel{v});
      }
      std::uint64_t fp = 0;
      const std::uint64_t probes = 100000;
      for (std::uint64_t i = 0; i < probes;) {
        const auto v = rng();
        if (in.contains(v)) continue;
        fp += f.contains(RangeLabel{v});
        ++i;
      }
      const double theory = theoretical_fpr_exact(m, n, k);
      EXPECT_NEAR(static_cast<double>(fp) / probes, theory, 0.2 * theory) << load << " " << k;
    }
  }
}
