#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "ketra/error.hpp"
#include "ketra/eval.hpp"
#include "oracles.hpp"

using namespace ketra;
using namespace ketra::testing;

namespace {

double brute_threshold(std::vector<double> s, const std::vector<int>& l) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u = s;
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  std::vector<double> cand{inf, -inf};
  for (std::size_t i = 0; i + 1 < u.size(); ++i) cand.push_back(0.5 * u[i] + 0.5 * u[i + 1]);
  std::sort(cand.begin(), cand.end(), std::greater<>());
  double best = -1, tau = inf;
  for (double c : cand) {
    const double f = pooled_f1(s, l, c);
    if (f > best) {
      best = f;
      tau = c;
    }
  }
  return tau;
}

struct Random {
  std::vector<double> s;
  std::vector<int> l;
};

Random random_scores(std::mt19937_64& rng, std::size_t max_n = 200) {
  std::uniform_int_distribution<std::size_t> n_dist(2, max_n);
  const auto n = n_dist(rng);
  // coarse values make ties common
  std::uniform_int_distribution<int> v(0, static_cast<int>(rng() % 20 + 1));
  Random r;
  for (std::size_t i = 0; i < n; ++i) {
    r.s.push_back(v(rng) * 0.125 - 1.0);
    r.l.push_back(static_cast<int>(rng() % 2));
  }
  r.l[0] = 1;
  r.l[1] = 0;
  return r;
}

KnowledgeGraph small_kg(std::size_t ne, std::size_t nr, double density, std::mt19937_64& rng) {
  KnowledgeGraph kg;
  for (std::size_t i = 0; i < ne; ++i) kg.entities.intern("e" + std::to_string(i));
  for (std::size_t k = 0; k < nr; ++k) kg.relations.intern("r" + std::to_string(k));
  const auto x = random_tensor(ne, nr, density, rng);
  kg.triples.assign(x.entries().begin(), x.entries().end());
  return kg;
}

}  // namespace

TEST_CASE("auc examples") {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.1};
  CHECK(auc(s, std::vector<int>{1, 1, 0, 0}) == 1.0);
  CHECK(auc(s, std::vector<int>{0, 0, 1, 1}) == 0.0);
  CHECK(auc(s, std::vector<int>{1, 0, 1, 0}) == 0.75);
  CHECK(auc(std::vector<double>{1, 1}, std::vector<int>{1, 0}) == 0.5);
  CHECK(auc(std::vector<double>{1, 1, 2}, std::vector<int>{1, 0, 0}) == 0.25);
  CHECK_THROWS_AS(auc(s, std::vector<int>{1, 1, 1, 1}), ValidationError);
  CHECK_THROWS_AS(auc(s, std::vector<int>{1, 0}), ValidationError);
  CHECK_THROWS_AS(auc(s, std::vector<int>{1, 0, 2, 0}), ValidationError);
  CHECK_THROWS_AS(auc(std::vector<double>{NAN, 1}, std::vector<int>{1, 0}), NumericalError);
}

TEST_CASE("auc matches the all-pairs count") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto r = random_scores(rng);
    CHECK(auc(r.s, r.l) == brute_auc(r.s, r.l));
  }
}

TEST_CASE("threshold examples") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(tune_threshold(std::vector<double>{0.9, 0.8, 0.3, 0.1}, std::vector<int>{1, 1, 0, 0}) == doctest::Approx(0.55));
  // all-positive prediction is best
  CHECK(tune_threshold(std::vector<double>{0.1, 0.9, 0.5}, std::vector<int>{1, 1, 0}) == -inf);
  // F1 1/2 at tau = 0.5 and at tau = -inf; the larger wins
  CHECK(tune_threshold(std::vector<double>{1, 0}, std::vector<int>{0, 1}) == -inf);
  CHECK(tune_threshold(std::vector<double>{3, 2, 1}, std::vector<int>{1, 0, 0}) == 2.5);
}

TEST_CASE("threshold matches the brute-force scan") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto r = random_scores(rng);
    const double tau = tune_threshold(r.s, r.l);
    CHECK(tau == brute_threshold(r.s, r.l));
  }
}

TEST_CASE("confusion conventions") {
  Confusion c;
  CHECK(c.precision() == 0.0);
  CHECK(c.recall() == 0.0);
  CHECK(c.f1() == 0.0);
  c.tp = 3;
  c.fp = 1;
  c.fn = 2;
  CHECK(c.precision() == 0.75);
  CHECK(c.recall() == 0.6);
  CHECK(c.f1() == doctest::Approx(2 * 0.75 * 0.6 / 1.35));
}

TEST_CASE("micro and macro F1 match per-relation confusion counts") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto r = random_scores(rng, 120);
    LabeledTriples test;
    const Index nr = static_cast<Index>(rng() % 5 + 1);
    for (std::size_t i = 0; i < r.s.size(); ++i) {
      test.items.push_back({{static_cast<Index>(i), static_cast<Index>(rng() % nr), 0}, r.l[i]});
    }
    const double tau = (rng() % 3 == 0) ? -std::numeric_limits<double>::infinity() : r.s[rng() % r.s.size()];
    const auto rep = report_from_scores(test, r.s, tau);

    std::map<Index, std::array<double, 4>> m;  // tp fp fn n
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < r.s.size(); ++i) {
      const bool pred = r.s[i] > tau;
      auto& c = m[test.items[i].t.r];
      c[0] += pred && r.l[i];
      c[1] += pred && !r.l[i];
      c[2] += !pred && r.l[i];
      c[3] += 1;
      tp += pred && r.l[i];
      fp += pred && !r.l[i];
      fn += !pred && r.l[i];
    }
    const double micro = tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
    double macro = 0.0;
    for (const auto& [k, c] : m) macro += c[0] == 0 ? 0.0 : 2 * c[0] / (2 * c[0] + c[1] + c[2]);
    macro /= static_cast<double>(m.size());
    CHECK(rep.f1_micro == doctest::Approx(micro).epsilon(1e-15));
    CHECK(rep.f1_macro == doctest::Approx(macro).epsilon(1e-15));
    REQUIRE(rep.per_relation.size() == m.size());
    for (const auto& pr : rep.per_relation) CHECK(pr.support == static_cast<std::size_t>(m[pr.relation][3]));
    CHECK(rep.auc == brute_auc(r.s, r.l));
  }
}

TEST_CASE("single-class reports have no auc") {
  LabeledTriples t;
  t.items = {{{0, 0, 1}, 1}, {{1, 0, 2}, 1}};
  const auto rep = report_from_scores(t, {0.5, -0.5}, 0.0);
  CHECK(std::isnan(rep.auc));
  CHECK(rep.f1_micro == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(report_from_scores(t, {0.5}, 0.0), ValidationError);
}

TEST_CASE("corrupt objects") {
  KnowledgeGraph kg;
  kg.entities.intern("a");
  kg.entities.intern("b");
  kg.relations.intern("r");
  kg.triples = {{0, 0, 0}};
  std::vector<std::string> warn;
  const std::vector<Triple> pos{{0, 0, 0}};
  const auto one = corrupt_objects(kg, pos, 1, 7, &warn);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Triple{0, 0, 1});
  CHECK(warn.empty());
  // only one candidate exists, so the second draw is exhausted
  const auto two = corrupt_objects(kg, pos, 2, 7, &warn);
  CHECK(two.size() == 1);
  CHECK(warn.size() == 1);
  const TripleSet forbid{{0, 0, 1}};
  warn.clear();
  CHECK(corrupt_objects(kg, pos, 1, 7, &warn, &forbid).empty());
  CHECK(warn.size() == 1);
  CHECK(corrupt_objects(kg, {}, 3, 7).empty());

  std::mt19937_64 rng(4);
  const auto big = small_kg(30, 3, 0.2, rng);
  const std::vector<Triple> some(big.triples.begin(), big.triples.begin() + 10);
  const auto neg = corrupt_objects(big, some, 25, 11);
  CHECK(neg.size() == 25);
  const auto known = big.triple_set();
  std::set<Triple> uniq(neg.begin(), neg.end());
  CHECK(uniq.size() == neg.size());
  for (std::size_t i = 0; i < neg.size(); ++i) {
    CHECK_FALSE(known.contains(neg[i]));
    CHECK(neg[i].s == some[i % 10].s);
    CHECK(neg[i].r == some[i % 10].r);
  }
  CHECK(corrupt_objects(big, some, 25, 11) == neg);
}

TEST_CASE("stratified-uniform split") {
  std::mt19937_64 rng(5);
  const auto kg = small_kg(40, 4, 0.15, rng);
  const auto split = make_test_set(kg, 10, 99);
  std::map<Index, std::pair<int, int>> counts;
  const auto known = kg.triple_set();
  const auto train = split.train.triple_set();
  for (const auto& x : split.test.items) {
    (x.label ? counts[x.t.r].first : counts[x.t.r].second) += 1;
    if (x.label) {
      CHECK(known.contains(x.t));
      CHECK_FALSE(train.contains(x.t));
    } else {
      CHECK_FALSE(known.contains(x.t));
    }
  }
  CHECK(counts.size() == 4);
  for (const auto& [r, c] : counts) {
    CHECK(c.first == 6);
    CHECK(c.second == 4);
  }
  CHECK(split.train.triples.size() + split.test.positives() == kg.triples.size());
  CHECK(split.test.provenance == Provenance::stratified_uniform);
  CHECK(make_test_set(kg, 10, 99).test.items == split.test.items);
  CHECK_FALSE(make_test_set(kg, 10, 100).test.items == split.test.items);
  CHECK_THROWS_AS(make_test_set(kg, 0, 1), ValidationError);
}

TEST_CASE("small slices are capped or skipped") {
  KnowledgeGraph kg;
  for (const char* e : {"a", "b", "c", "d", "e", "f"}) kg.entities.intern(e);
  kg.relations.intern("tiny");
  kg.relations.intern("pair");
  kg.triples = {{0, 0, 1}, {0, 1, 1}, {2, 1, 3}};
  const auto split = make_test_set(kg, 10, 1);
  CHECK(split.test.positives() == 1);
  CHECK(split.warnings.size() >= 2);
  for (const auto& x : split.test.items) CHECK(x.t.r == 1);
  KnowledgeGraph lone = kg;
  lone.triples = {{0, 0, 1}, {0, 1, 1}};
  CHECK_THROWS_AS(make_test_set(lone, 10, 1), ValidationError);
}

TEST_CASE("stratified-weighted split") {
  std::mt19937_64 rng(6);
  const auto kg = small_kg(40, 3, 0.1, rng);
  const std::vector<Triple> pos(kg.triples.begin(), kg.triples.begin() + 30);
  const auto keep = make_weighted_test_set(kg, pos, WeightedMode::keep_all, 3);
  CHECK(keep.test.positives() == 30);
  CHECK(keep.test.items.size() == 50);
  const auto exact = make_weighted_test_set(kg, pos, WeightedMode::split_60_40, 3);
  CHECK(exact.test.positives() == 18);
  CHECK(exact.test.items.size() == 30);
  const TripleSet given(pos.begin(), pos.end());
  for (const auto& x : exact.test.items) {
    if (!x.label) CHECK_FALSE(given.contains(x.t));
  }
  CHECK(exact.train.triples.size() == kg.triples.size() - 18);
  CHECK(parse_weighted_mode("split_60_40") == WeightedMode::split_60_40);
  CHECK_THROWS_AS(make_weighted_test_set(kg, {}, WeightedMode::keep_all, 3), ValidationError);
}

TEST_CASE("scoring and labeled triple files") {
  std::mt19937_64 rng(7);
  const auto kg = small_kg(6, 2, 0.3, rng);
  FactorSet f;
  f.a = random_matrix(6, 2, rng);
  f.r = {random_matrix(2, 2, rng), random_matrix(2, 2, rng)};
  LabeledTriples t;
  t.items = {{{0, 0, 1}, 1}, {{2, 1, 3}, 0}, {{5, 1, 5}, 1}};
  const auto s = score_items(f, t);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& x = t.items[i].t;
    CHECK(s[i] == doctest::Approx((f.a.row(x.s) * f.r[x.r] * f.a.row(x.o).transpose())(0, 0)).epsilon(1e-14));
  }
  LabeledTriples bad;
  bad.items = {{{6, 0, 0}, 1}};
  CHECK_THROWS_AS(score_items(f, bad), ValidationError);

  const auto dir = temp_dir("labeled");
  write_labeled_triples(t, kg, dir / "t.tsv");
  const auto back = read_labeled_triples(dir / "t.tsv", kg);
  CHECK(back.items == t.items);
  write_file(dir / "bad.tsv", "e0\tr0\te1\t2\n");
  CHECK_THROWS_AS(read_labeled_triples(dir / "bad.tsv", kg), ParseError);
  write_file(dir / "unk.tsv", "e0\tnope\te1\t1\n");
  CHECK_THROWS_AS(read_labeled_triples(dir / "unk.tsv", kg), ParseError);

  const auto rep = classify_and_report(f, t, 0.0);
  write_report_csv(rep, kg.relations, dir / "o.csv", dir / "p.csv");
  CHECK(read_file(dir / "o.csv").rfind("auc,threshold,f1_micro,f1_macro,items\n", 0) == 0);
  CHECK(read_file(dir / "p.csv").find("r1,") != std::string::npos);
  CHECK(format_report(rep, kg.relations).find("f1 macro") != std::string::npos);
}
