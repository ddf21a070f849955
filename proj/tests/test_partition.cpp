#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "zn/partition.hpp"

#include <set>

using namespace zn;

TEST_CASE("enumeration counts match the multinomial") {
    CHECK(partition_count(2, 1) == 2);
    CHECK(partition_count(2, 2) == 6);
    CHECK(partition_count(3, 1) == 6);
    CHECK(partition_count(2, 3) == 20);
    CHECK(partition_count(3, 2) == 90);
    CHECK(partition_count(4, 1) == 24);
    CHECK(partition_count(2, 4) == 70);

    for (auto [N, m] : {std::pair{2, 2}, {3, 2}, {2, 3}, {4, 1}}) {
        auto parts = enumerate_partitions(N, m);
        CHECK(parts.size() == partition_count(N, m));
        std::set<std::string> keys;
        for (const auto& p : parts) {
            CHECK(p.N() == N);
            CHECK(p.m() == m);
            keys.insert(p.to_string());
        }
        CHECK(keys.size() == parts.size());        /* all distinct */
        /* lexicographic start: identity partition */
        CHECK(parts.front().block(1).front() == 1);
    }
}

TEST_CASE("enumeration cap raises Overflow") {
    CHECK_THROWS_WITH_AS(enumerate_partitions(4, 4), doctest::Contains("Overflow"), Error);
    CHECK_THROWS_WITH_AS(partition_count(8, 4), doctest::Contains("Overflow"), Error);
}

TEST_CASE("block lookup and element access") {
    auto p = make_partition({{1, 4}, {2, 5}, {3, 6}});
    CHECK(p.N() == 3);
    CHECK(p.m() == 2);
    CHECK(p.block_of(4) == 1);
    CHECK(p.block_of(3) == 3);
    CHECK(p.element(2, 2) == 5);
    CHECK(p.block(0) == p.block(3));               /* block 0 is block N */
    CHECK_THROWS_WITH_AS(p.block_of(7), doctest::Contains("InvalidIndex"), Error);
    CHECK_THROWS_WITH_AS(p.element(1, 3), doctest::Contains("InvalidIndex"), Error);
}

TEST_CASE("swap moves elements between blocks") {
    auto p = make_partition({{1, 2}, {3, 4}});
    auto q = p.swapped(1, 3);
    CHECK(q.block(1) == std::vector<int>{2, 3});
    CHECK(q.block(2) == std::vector<int>{1, 4});
    CHECK(q.swapped(3, 1) == p);                   /* involution */
    CHECK_THROWS_WITH_AS(p.swapped(1, 2), doctest::Contains("BadIndices"), Error);
}

TEST_CASE("reversal fixes block N and reverses the rest") {
    auto p = make_partition({{1, 2}, {3, 4}, {5, 6}, {7, 8}});
    auto r = p.reversed();
    CHECK(r.block(4) == p.block(4));
    CHECK(r.block(1) == p.block(3));
    CHECK(r.block(2) == p.block(2));
    CHECK(r.block(3) == p.block(1));
    CHECK(r.reversed() == p);
}

TEST_CASE("block permutation fixes block N") {
    auto p = make_partition({{1}, {2}, {3}});
    auto s = p.permuted({2, 1});
    CHECK(s.block(1) == p.block(2));
    CHECK(s.block(2) == p.block(1));
    CHECK(s.block(3) == p.block(3));
    CHECK_THROWS_WITH_AS(p.permuted({1, 3}), doctest::Contains("BadIndices"), Error);
    CHECK(all_permutations(3).size() == 6);
    CHECK(all_permutations(1).size() == 1);
}

TEST_CASE("partition validation") {
    CHECK_THROWS_WITH_AS(make_partition({{1, 2}, {2, 3}}), doctest::Contains("BadIndices"),
                         Error);
    CHECK_THROWS_WITH_AS(make_partition({{1, 2}, {3}}), doctest::Contains("BadIndices"), Error);
    CHECK_THROWS_WITH_AS(make_partition({{1, 2}, {4, 5}}), doctest::Contains("BadIndices"),
                         Error);
}
