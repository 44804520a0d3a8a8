#include <doctest.h>

#include <random>

#include "mfmclust/phylo_tree.hpp"

using namespace mfmclust;

TEST_CASE("smallest tree") {
  const auto t = parse_newick("(A,B);");
  CHECK(t.n_internal() == 1);
  CHECK(t.node(t.root()).children.size() == 2);
  CHECK(t.leaf_labels() == std::vector<std::string>{"A", "B"});
}

TEST_CASE("balanced four-leaf tree") {
  const auto t = parse_newick("((A,B),(C,D));");
  CHECK(t.n_internal() == 3);
  CHECK(t.node(t.root()).children.size() == 2);
  CHECK(t.internal_nodes().front() == t.root());
  CHECK(t.node_path(t.internal_nodes()[1]) == "root/0");
  CHECK(t.node_path(t.internal_nodes()[2]) == "root/1");
}

TEST_CASE("branch lengths, comments, quotes and multifurcation") {
  const auto t = parse_newick("((A:0.1,'B c':2e-3)[note]inner:0.5,C,D_1)root;");
  CHECK(t.n_internal() == 2);
  CHECK(t.node(t.root()).children.size() == 3);
  CHECK(t.leaf_labels() == std::vector<std::string>{"A", "B c", "C", "D_1"});
}

TEST_CASE("unary nodes collapse") {
  const auto t = parse_newick("(((A,B)),C);");
  CHECK(t.n_internal() == 2);
  CHECK_THROWS_WITH_AS(parse_newick("((A));"), doctest::Contains("two leaves"), NewickError);
}

TEST_CASE("malformed newick reports an offset") {
  for (const char* bad : {"((A,B);", "(A,B));", "(A,B)", "(A,A);", "", "(A,);", "(A,B);x", "(A:x,B);"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_newick(bad), NewickError);
  }
  try {
    parse_newick("(A,B,A);");
    FAIL("expected an error");
  } catch (const NewickError& e) {
    CHECK(e.offset() == 5);
  }
}

TEST_CASE("serialise and parse is idempotent on topology") {
  for (const char* text : {"((A,B),(C,D));", "(A,(B,(C,'x y')),E,F);", "((a,b,c),(d,(e,f)));"}) {
    const auto t1 = parse_newick(text);
    const auto s1 = to_newick(t1);
    const auto t2 = parse_newick(s1);
    CHECK(to_newick(t2) == s1);
    CHECK(t2.n_internal() == t1.n_internal());
    CHECK(t2.leaf_labels() == t1.leaf_labels());
  }
}

TEST_CASE("tree counts") {
  CountArray c(1, 3);
  c << 2, 3, 5;
  const CountMatrix m(c, {"s"}, {"A", "B", "C"});

  SUBCASE("nested tree") {
    const auto t = parse_newick("((A,B),C);");
    const auto tc = propagate_tree_counts(m, t);
    REQUIRE(tc.n_internal() == 2);
    CHECK(tc.branch(0, tc.offset[0]) == 5);
    CHECK(tc.branch(0, tc.offset[0] + 1) == 5);
    CHECK(tc.branch(0, tc.offset[1]) == 2);
    CHECK(tc.branch(0, tc.offset[1] + 1) == 3);
    CHECK(tc.node_total(0, 0) == 10);
  }
  SUBCASE("star tree mirrors the row") {
    const auto tc = propagate_tree_counts(m, star_tree({"C", "A", "B"}));
    REQUIRE(tc.n_internal() == 1);
    CHECK(tc.branch(0, 0) == 5);
    CHECK(tc.branch(0, 1) == 2);
    CHECK(tc.branch(0, 2) == 3);
    CHECK(tc.node_total(0, 0) == m.row_sums()[0]);
  }
  SUBCASE("zero column leaves zeros on its path") {
    CountArray z(1, 3);
    z << 0, 3, 5;
    const auto tc = propagate_tree_counts(CountMatrix(z, {"s"}, {"A", "B", "C"}), parse_newick("((A,B),C);"));
    CHECK(tc.branch(0, tc.offset[1]) == 0);
    CHECK(tc.branch(0, tc.offset[0]) == 3);
  }
  SUBCASE("label mismatch lists the names") {
    CHECK_THROWS_WITH_AS(propagate_tree_counts(m, parse_newick("((A,B),Z);")),
                         doctest::Contains("Z"), InputError);
    CHECK_THROWS_WITH_AS(propagate_tree_counts(m, parse_newick("((A,B),Z);")),
                         doctest::Contains("C"), InputError);
  }
}

TEST_CASE("root branches sum to the sample depth on random trees") {
  std::mt19937_64 rng(3);
  CountArray c(4, 6);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j) c(i, j) = static_cast<std::int64_t>(rng() % 7) + (j == 0);
  const CountMatrix m(c, {"a", "b", "c", "d"}, {"f1", "f2", "f3", "f4", "f5", "f6"});
  const auto t = parse_newick("((f1,(f2,f3)),(f4,f5,f6));");
  const auto tc = propagate_tree_counts(m, t);
  for (int i = 0; i < 4; ++i) {
    CHECK(tc.node_total(i, 0) == m.row_sums()[i]);
    for (int p = 0; p < tc.n_internal(); ++p) {
      std::int64_t s = 0;
      for (int b = 0; b < tc.arity[static_cast<std::size_t>(p)]; ++b) s += tc.branch(i, tc.offset[static_cast<std::size_t>(p)] + b);
      CHECK(s == tc.node_total(i, p));
    }
  }
}
