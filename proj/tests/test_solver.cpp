#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include <set>

using namespace rfempc;
using namespace rfempc::testing;

TEST_CASE("ActiveSet basics")
{
  ActiveSet a(70);
  CHECK(a.empty());
  CHECK(a.hex() == "0x0");
  a.set(0);
  a.set(2);
  a.set(65);
  CHECK(a.count() == 3);
  CHECK(a.test(65));
  CHECK(a.indices() == std::vector<int>{0, 2, 65});
  CHECK(ActiveSet::from_hex(a.hex(), 70) == a);
  CHECK(ActiveSet(70, {0, 2}).hex() == "0x5");
  CHECK(ActiveSet(70, {0, 2}).subset_of(a));
  CHECK_FALSE(a.subset_of(ActiveSet(70, {0, 2})));
  CHECK(a.without(65) == ActiveSet(70, {0, 2}));
  CHECK(a.with(1).count() == 4);
  CHECK_THROWS_AS(a.set(70), std::out_of_range);
  CHECK_THROWS(ActiveSet::from_hex("0x8", 3));
}

TEST_CASE("colex successor visits each k-subset once")
{
  ActiveSet a(6, {0, 1});
  std::set<unsigned long> seen;
  unsigned long prev = 0;
  do {
    CHECK(a.count() == 2);
    CHECK(a.low_word() > prev);
    prev = a.low_word();
    seen.insert(a.low_word());
  } while (a.next_combination());
  CHECK(seen.size() == 15);
}

TEST_CASE("kkt_solve")
{
  SUBCASE("z <= -1: lambda and z by hand")
  {
    // H = 1, G = [1], W + S theta = -1: K = 1, lambda = 1, z = -1.
    const auto qp  = LiftedQP::build(scalar_rows({{0.0, 1.0}}));
    const auto kkt = kkt_solve(qp, ActiveSet(1, {0}), unit_theta());
    REQUIRE(kkt);
    CHECK(kkt->z(0) == doctest::Approx(-1.0));
    CHECK(kkt->lambda_A(0) == doctest::Approx(1.0));
  }
  SUBCASE("duplicated row is singular")
  {
    const auto qp = LiftedQP::build(scalar_rows({{0.0, -1.0}, {0.0, -1.0}}));
    CHECK_FALSE(kkt_solve(qp, ActiveSet(2, {0, 1}), unit_theta()));
    CHECK_FALSE(satisfies_licq(qp, ActiveSet(2, {0, 1})));
    CHECK(satisfies_licq(qp, ActiveSet(2, {1})));
  }
  SUBCASE("random LICQ sets: stationarity and active equality")
  {
    Rng rng(41);
    int checked = 0;
    for (int t = 0; t < 200 && checked < 100; ++t) {
      const auto inst = random_instance(rng);
      const auto qp   = LiftedQP::build(inst.problem);
      const int p     = static_cast<int>(qp.constraints().p_tilde());
      std::vector<int> idx;
      for (int k = 0; k < p && static_cast<Index>(idx.size()) < qp.dims().decision_dim(); ++k) {
        if (std::bernoulli_distribution(0.5)(rng)) { idx.push_back(k); }
      }
      const ActiveSet A(p, idx);
      if (A.empty()) { continue; }
      const auto kkt = kkt_solve(qp, A, inst.theta);
      if (!kkt) { continue; }
      ++checked;
      Matrix GA(A.count(), qp.dims().decision_dim());
      Vector rA(A.count());
      const Vector r = qp.rhs(inst.theta);
      for (int i = 0; i < A.count(); ++i) {
        GA.row(i) = qp.constraints().G.row(idx[static_cast<std::size_t>(i)]);
        rA(i)     = r(idx[static_cast<std::size_t>(i)]);
      }
      CHECK((qp.cost().H * kkt->z + GA.transpose() * kkt->lambda_A).norm() <= 1e-8 * (1.0 + kkt->z.norm()));
      CHECK((GA * kkt->z - rA).norm() <= 1e-8 * (1.0 + rA.norm()));
    }
    CHECK(checked >= 50);
  }
}

TEST_CASE("check_optimality")
{
  const auto qp       = LiftedQP::build(scalar_rows({{1.0, 1.0}, {0.7, -1.0}}));  // z <= 0, z >= 0.3
  const Tolerances t  = Tolerances::defaults_for(qp);
  SUBCASE("violations at z = 0")
  {
    const auto c = check_optimality(qp, Vector::Zero(1), Vector(), ActiveSet(2), unit_theta(), t);
    CHECK(c.violations == std::vector<int>{1});
    CHECK(c.negative_multipliers.empty());
  }
  SUBCASE("negative multiplier")
  {
    const auto c = check_optimality(qp, Vector::Zero(1), vec({-1.0}), ActiveSet(2, {0}), unit_theta(), t);
    CHECK(c.negative_multipliers == std::vector<int>{0});
  }
  SUBCASE("interior optimum")
  {
    const auto free = LiftedQP::build(scalar_rows({{2.0, 1.0}}));
    CHECK(check_optimality(free, Vector::Zero(1), Vector(), ActiveSet(1), unit_theta(), Tolerances::defaults_for(free))
            .optimal());
  }
  SUBCASE("violations ordered by slack")
  {
    // z <= -0.5 (slack -0.5 at z = 0), z <= -1 (slack -1), z <= -0.2
    const auto q = LiftedQP::build(scalar_rows({{0.5, 1.0}, {0.0, 1.0}, {0.8, 1.0}}));
    const auto c = check_optimality(q, Vector::Zero(1), Vector(), ActiveSet(3), unit_theta(), Tolerances::defaults_for(q));
    CHECK(c.violations == std::vector<int>{1, 0, 2});
  }
}

TEST_CASE("active-set search hand traces")
{
  SUBCASE("z <= 1: empty set, no KKT solve")
  {
    const auto qp = LiftedQP::build(scalar_rows({{2.0, 1.0}}));
    const auto r  = certified_solve(qp, unit_theta());
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(r.active_set.empty());
    CHECK(r.z_star(0) == 0.0);
    CHECK(r.stats.kkt_solves == 0);
  }
  SUBCASE("z >= 1: push {1}")
  {
    const auto qp = LiftedQP::build(z_ge_1());
    const auto r  = certified_solve(qp, unit_theta());
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(r.active_set == ActiveSet(1, {0}));
    CHECK(r.z_star(0) == doctest::Approx(1.0));
    CHECK(r.u_first(0) == doctest::Approx(1.0));
    CHECK(r.stats.candidates_visited == 2);
    CHECK(r.stats.kkt_solves == 1);
  }
  SUBCASE("z >= 1 twice")
  {
    const auto qp = LiftedQP::build(scalar_rows({{0.0, -1.0}, {0.0, -1.0}}));
    const auto r  = certified_solve(qp, unit_theta());
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(r.active_set.count() == 1);
    CHECK(r.z_star(0) == doctest::Approx(1.0));
    CHECK(satisfies_licq(qp, r.active_set));
  }
  SUBCASE("empty feasible set: z <= -1 and z >= 1")
  {
    const auto qp = LiftedQP::build(scalar_rows({{0.0, 1.0}, {0.0, -1.0}}));
    const auto r  = certified_solve(qp, unit_theta());
    CHECK(r.status == SolveStatus::Infeasible);
  }
}

TEST_CASE("SolverState keeps minimal violators")
{
  SolverState s(8, true);
  s.add_violator(ActiveSet(8, {0, 1, 2}));
  s.add_violator(ActiveSet(8, {0, 1}));
  CHECK(s.violators().size() == 1);
  s.add_violator(ActiveSet(8, {0, 1, 5}));
  CHECK(s.violators().size() == 1);
  CHECK(s.contains_violator(ActiveSet(8, {0, 1, 7})));
  CHECK_FALSE(s.contains_violator(ActiveSet(8, {0, 7})));
  CHECK_FALSE(s.visited(ActiveSet(8, {3})));
  s.mark_visited(ActiveSet(8, {3}));
  CHECK(s.visited(ActiveSet(8, {3})));

  SolverState big(40, true);
  big.mark_visited(ActiveSet(40, {39}));
  CHECK(big.visited(ActiveSet(40, {39})));
  SolverState off(8, false);
  off.mark_visited(ActiveSet(8, {3}));
  CHECK_FALSE(off.visited(ActiveSet(8, {3})));
}

TEST_CASE("warm-start independence and cardinality bound")
{
  Rng rng(99);
  for (int t = 0; t < 100; ++t) {
    const auto inst = random_instance(rng);
    const auto qp   = LiftedQP::build(inst.problem);
    const auto tol  = Tolerances::defaults_for(qp);
    const int p     = static_cast<int>(qp.constraints().p_tilde());
    const auto cold = certified_solve(qp, inst.theta, ActiveSet(p), tol);
    REQUIRE(cold.status == SolveStatus::Optimal);
    CHECK(cold.active_set.count() <= qp.dims().decision_dim());

    std::vector<int> idx;
    for (int k = 0; k < p; ++k) {
      if (std::bernoulli_distribution(0.3)(rng)) { idx.push_back(k); }
    }
    const auto warm = certified_solve(qp, inst.theta, ActiveSet(p, idx), tol);
    REQUIRE(warm.status == SolveStatus::Optimal);
    CHECK((warm.z_star - cold.z_star).norm() <= 1e-8);

    const auto again = certified_solve(qp, inst.theta, cold.active_set, tol);
    CHECK(again.stats.kkt_solves <= 1);
    CHECK(again.stats.candidates_visited == 1);

    const auto fast = certified_solve(qp, inst.theta, ActiveSet(p), tol, SolveOptions{false});
    REQUIRE(fast.status == SolveStatus::Optimal);
    CHECK((fast.z_star - cold.z_star).norm() <= 1e-8);
  }
}

TEST_CASE("optimal cost beats sampled admissible sequences")
{
  Rng rng(123);
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    const auto inst = random_instance(rng);
    const auto & p  = inst.problem;
    const auto qp   = LiftedQP::build(p);
    const auto r    = certified_solve(qp, inst.theta);
    REQUIRE(r.status == SolveStatus::Optimal);
    const double best = evaluate_lifted_cost(qp, r.u_seq, inst.theta);
    const auto th     = Parameter::from_stacked(inst.theta, p.state_dim());
    int accepted = 0;
    for (int s = 0; s < 20000 && accepted < 100; ++s) {
      Vector u = r.u_seq;
      for (Index i = 0; i < u.size(); ++i) { u(i) += 0.5 * g(rng); }
      if (!check_admissible(p, u, th).admissible) { continue; }
      ++accepted;
      CHECK(best <= evaluate_lifted_cost(qp, u, inst.theta) + 1e-9);
    }
  }
}

TEST_CASE("budget")
{
  Rng rng(4);
  const auto inst = infeasible_instance(rng, 10);
  const auto qp   = LiftedQP::build(inst.problem);
  Tolerances tol  = Tolerances::defaults_for(qp);
  tol.max_kkt_solves = 3;
  const auto r = solve(qp, inst.theta, ActiveSet(10), tol);
  CHECK(r.status == SolveStatus::BudgetExhausted);
  CHECK(r.stats.kkt_solves == 3);
  CHECK(std::string(to_string(r.status)) == "budget_exhausted");
}

TEST_CASE("reduce_to_licq")
{
  SUBCASE("LICQ input unchanged")
  {
    const auto qp = LiftedQP::build(z_ge_1());
    const ActiveSet A(1, {0});
    CHECK(reduce_to_licq(qp, A, unit_theta(), Tolerances::defaults_for(qp)) == A);
  }
  SUBCASE("z >= 1 twice")
  {
    const auto qp = LiftedQP::build(scalar_rows({{0.0, -1.0}, {0.0, -1.0}}));
    const auto A  = reduce_to_licq(qp, ActiveSet(2, {0, 1}), unit_theta(), Tolerances::defaults_for(qp));
    CHECK(A.count() == 1);
    const auto kkt = kkt_solve(qp, A, unit_theta());
    REQUIRE(kkt);
    CHECK(kkt->z(0) == doctest::Approx(1.0));
  }
  SUBCASE("not sufficient")
  {
    const auto qp = LiftedQP::build(scalar_rows({{0.0, -1.0}, {3.0, 1.0}}));  // z >= 1, z <= 2
    CHECK_THROWS_AS(reduce_to_licq(qp, ActiveSet(2, {1}), unit_theta(), Tolerances::defaults_for(qp)),
                    NotSufficientError);
  }
  SUBCASE("random degenerate sets")
  {
    Rng rng(77);
    for (int t = 0; t < 30; ++t) {
      const auto d  = degenerate_instance(rng);
      const auto qp = LiftedQP::build(d.instance.problem);
      const auto & th = d.instance.theta;
      const auto ref  = oracle::enumerate(qp, th, Tolerances::defaults_for(qp));
      REQUIRE(ref.status == SolveStatus::Optimal);
      const auto A = reduce_to_licq(qp, d.degenerate_set, th, Tolerances::defaults_for(qp));
      CHECK(A.subset_of(d.degenerate_set));
      CHECK(satisfies_licq(qp, A));
      const auto kkt = kkt_solve(qp, A, th);
      REQUIRE(kkt);
      CHECK((kkt->z - ref.z_star).norm() <= 1e-8);
    }
  }
}
