#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "test_support.h"
#include "wordorder/errors.h"
#include "wordorder/pairrank.h"

using namespace wordorder;
using namespace wordorder::testing;

namespace {

FeatureVector fv(long long deplen, int is = 0, double trigram = 0.0) {
  FeatureVector f;
  f.dependency_length = deplen;
  f.is_score = is;
  f.trigram_surprisal = trigram;
  return f;
}

ReferenceGroup group(const std::string &id, FeatureVector ref, const std::vector<FeatureVector> &variants) {
  ReferenceGroup g;
  g.ref_id = id;
  g.order_type = OrderType::kOsvDoFronted;
  g.features = ref;
  for (std::size_t i = 0; i < variants.size(); ++i)
    g.variants.push_back({id + ".v" + std::to_string(i + 1), OrderType::kSov, variants[i]});
  return g;
}

const std::vector<Predictor> kDeplen{Predictor::kDependencyLength};
const std::vector<Predictor> kThree{Predictor::kDependencyLength, Predictor::kInformationStatus,
                                    Predictor::kTrigramSurprisal};

std::vector<PairInstance> random_instances(Rng &rng, std::size_t n, std::size_t p) {
  std::vector<PairInstance> out;
  for (std::size_t i = 0; i < n; ++i) {
    PairInstance inst;
    inst.ref_id = "r" + std::to_string(i / 3);
    inst.var_id = inst.ref_id + ".v" + std::to_string(i % 3 + 1);
    inst.label = static_cast<int>(i % 2);
    for (std::size_t j = 0; j < p; ++j) inst.delta.push_back(rng.normal() * (j + 1) + static_cast<double>(j));
    out.push_back(inst);
  }
  return out;
}

}  // namespace

TEST_CASE("predictor names") {
  for (Predictor p : kAllPredictors) CHECK(parse_predictor(to_string(p)) == p);
  CHECK(parse_predictor_list("deplen,is,trigram") == kThree);
  CHECK(format_predictor_list(kThree) == "deplen,is,trigram");
  CHECK_THROWS_AS(parse_predictor("length"), UsageError);
  CHECK_THROWS_AS(parse_predictor_list("deplen,deplen"), UsageError);
  CHECK(display_name(Predictor::kTrigramSurprisal) == "Trigram surprisal");
  const Construction c{OrderType::kOsvIoFronted, OrderType::kSov};
  CHECK(to_string(c) == "OSV_IO_FRONTED>SOV");
  CHECK(parse_construction(to_string(c)) == c);
}

TEST_CASE("subsets") {
  const Construction dosv{OrderType::kOsvDoFronted, OrderType::kSov};
  const Construction iosv{OrderType::kOsvIoFronted, OrderType::kSov};
  const Construction canon{OrderType::kSov, OrderType::kOsvDoFronted};
  CHECK(in_subset(dosv, Subset::kOsv));
  CHECK(in_subset(iosv, Subset::kOsv));
  CHECK(in_subset(dosv, Subset::kDosv));
  CHECK_FALSE(in_subset(iosv, Subset::kDosv));
  CHECK(in_subset(canon, Subset::kCanonical));
  CHECK_FALSE(in_subset(canon, Subset::kOsv));
  for (const auto &c : {dosv, iosv, canon}) CHECK(in_subset(c, Subset::kOverall));
}

TEST_CASE("pairwise transform examples") {
  SUBCASE("one variant, REF-VAR") {
    const std::vector<ReferenceGroup> gs{group("s", fv(2), {fv(5)})};
    const auto r = pairwise_transform(gs, kDeplen);
    REQUIRE(r.instances.size() == 1);
    CHECK(r.instances[0].delta == std::vector<double>{-3});
    CHECK(r.instances[0].label == 1);
    CHECK(r.instances[0].construction == Construction{OrderType::kOsvDoFronted, OrderType::kSov});
  }
  SUBCASE("second variant is VAR-REF") {
    const std::vector<ReferenceGroup> gs{group("s", fv(2), {fv(4), fv(5)})};
    const auto r = pairwise_transform(gs, kDeplen);
    REQUIRE(r.instances.size() == 2);
    CHECK(r.instances[1].delta == std::vector<double>{3});
    CHECK(r.instances[1].label == 0);
  }
  SUBCASE("alternating labels") {
    const std::vector<ReferenceGroup> four{group("s", fv(2), {fv(1), fv(2), fv(3), fv(4)})};
    std::vector<int> labels;
    for (const auto &i : pairwise_transform(four, kDeplen).instances) labels.push_back(i.label);
    CHECK(labels == std::vector<int>{1, 0, 1, 0});
    const std::vector<ReferenceGroup> five{group("s", fv(2), {fv(1), fv(2), fv(3), fv(4), fv(5)})};
    int ones = 0;
    for (const auto &i : pairwise_transform(five, kDeplen).instances) ones += i.label;
    CHECK(ones == 3);
  }
  SUBCASE("variants ordered by number, not text") {
    ReferenceGroup g = group("s", fv(0), {});
    for (int k : {10, 2, 1}) g.variants.push_back({"s.v" + std::to_string(k), OrderType::kSov, fv(k)});
    const std::vector<ReferenceGroup> gs{g};
    const auto r = pairwise_transform(gs, kDeplen);
    REQUIRE(r.instances.size() == 3);
    CHECK(r.instances[0].var_id == "s.v1");
    CHECK(r.instances[1].var_id == "s.v2");
    CHECK(r.instances[2].var_id == "s.v10");
  }
  SUBCASE("reference without variants is skipped") {
    const std::vector<ReferenceGroup> gs{group("s", fv(2), {}), group("t", fv(1), {fv(3)})};
    const auto r = pairwise_transform(gs, kDeplen);
    CHECK(r.instances.size() == 1);
    CHECK(r.skipped_references == 1);
    CHECK(r.warnings.size() == 1);
  }
  SUBCASE("absent features drop variants") {
    FeatureVector with = fv(1);
    with.pcfg_surprisal = 3.0;
    FeatureVector without = fv(2);
    const std::vector<ReferenceGroup> gs{group("s", with, {without, with})};
    const std::vector<Predictor> pcfg{Predictor::kPcfgSurprisal};
    const auto r = pairwise_transform(gs, pcfg);
    CHECK(r.instances.size() == 1);
    CHECK(r.dropped_incomplete == 1);
    CHECK(r.instances[0].label == 1);
  }
}

TEST_CASE("transform invariants") {
  Rng rng(4);
  std::vector<ReferenceGroup> gs;
  std::size_t odd = 0;
  for (int r = 0; r < 60; ++r) {
    std::vector<FeatureVector> vs;
    const std::size_t n = 1 + rng.uniform(7);
    odd += n % 2;
    for (std::size_t k = 0; k < n; ++k)
      vs.push_back(fv(static_cast<long long>(rng.uniform(20)), static_cast<int>(rng.uniform(3)) - 1, rng.normal()));
    gs.push_back(group("r" + std::to_string(r), fv(5, 1, 0.5), vs));
  }
  const auto result = pairwise_transform(gs, kThree);
  long long balance = 0;
  std::map<std::string, long long> per_ref;
  for (const auto &inst : result.instances) {
    balance += inst.label ? 1 : -1;
    per_ref[inst.ref_id] += inst.label ? 1 : -1;
    CHECK(inst.delta.size() == 3);
    const auto m = mirror(inst);
    CHECK(m.label == 1 - inst.label);
    for (std::size_t j = 0; j < 3; ++j) CHECK(m.delta[j] == -inst.delta[j]);
    CHECK(mirror(m) == inst);
  }
  CHECK(static_cast<std::size_t>(std::abs(balance)) <= odd);
  for (const auto &[ref, b] : per_ref) CHECK(std::abs(b) <= 1);
}

TEST_CASE("z-scoring") {
  SUBCASE("two values") {
    std::vector<PairInstance> xs(2);
    xs[0].delta = {-1};
    xs[1].delta = {1};
    const auto z = zscore_normalize(xs);
    const double sd = std::sqrt(2.0);
    CHECK(z.stats.columns[0].mean == 0);
    CHECK(z.stats.columns[0].sd == doctest::Approx(sd));
    CHECK(z.instances[0].delta[0] == doctest::Approx(-1 / sd));
    CHECK(z.instances[1].delta[0] == doctest::Approx(1 / sd));
  }
  SUBCASE("constant column") {
    std::vector<PairInstance> xs(3);
    for (auto &x : xs) x.delta = {3, 1};
    xs[1].delta[1] = 2;
    const auto z = zscore_normalize(xs);
    for (const auto &x : z.instances) CHECK(x.delta[0] == 0);
    CHECK(z.stats.warnings.size() == 1);
    CHECK(z.stats.columns[0].sd == 0);
  }
  SUBCASE("too few") {
    std::vector<PairInstance> xs(1);
    xs[0].delta = {1};
    CHECK_THROWS_AS(zscore_normalize(xs), StatisticsError);
  }
  SUBCASE("moments and scale invariance") {
    Rng rng(9);
    const auto xs = random_instances(rng, 200, 3);
    const auto z = zscore_normalize(xs);
    for (std::size_t j = 0; j < 3; ++j) {
      double mean = 0, ss = 0;
      for (const auto &x : z.instances) mean += x.delta[j];
      mean /= 200;
      for (const auto &x : z.instances) ss += (x.delta[j] - mean) * (x.delta[j] - mean);
      CHECK(std::abs(mean) < 1e-12);
      CHECK(std::abs(std::sqrt(ss / 199) - 1) < 1e-12);
    }
    auto scaled = xs;
    for (auto &x : scaled) x.delta[1] *= 37.5;
    const auto zs = zscore_normalize(scaled);
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(zs.instances[i].delta[j] - z.instances[i].delta[j]) < 1e-9);
    // stats reapply to held-out rows
    const auto again = apply_normalization(xs, z.stats);
    CHECK(again == z.instances);
  }
}

TEST_CASE("pair table round trip") {
  Rng rng(2);
  auto xs = random_instances(rng, 12, 3);
  xs[4].construction = {OrderType::kOsvIoFronted, OrderType::kSov};
  std::ostringstream out;
  const std::vector<std::string> header{"artifact: test"};
  write_pair_table(out, xs, kThree, header);
  std::istringstream in(out.str());
  const auto table = read_pair_table(in);
  CHECK(table.predictors == kThree);
  CHECK(table.instances == xs);

  const auto z = zscore_normalize(xs);
  std::ostringstream stats;
  write_stats_table(stats, z.stats, kThree);
  CHECK(stats.str().find("deplen") != std::string::npos);
}

TEST_CASE("grouping feature rows") {
  std::vector<FeatureRow> rows(3);
  rows[0] = {"a.v1", "a", Origin::kVariant, OrderType::kSov, fv(3)};
  rows[1] = {"a", "a", Origin::kReference, OrderType::kOsvDoFronted, fv(1)};
  rows[2] = {"b.v1", "b", Origin::kVariant, OrderType::kSov, fv(3)};
  CHECK_THROWS_AS(group_feature_rows(rows), FormatError);
  rows.pop_back();
  const auto groups = group_feature_rows(rows);
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].order_type == OrderType::kOsvDoFronted);
  CHECK(groups[0].variants.size() == 1);
}
