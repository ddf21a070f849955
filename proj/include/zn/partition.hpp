#pragma once

#include "zn/error.hpp"

#include <string>
#include <vector>

namespace zn {

/* Ordered partition of {1..Nm} into N blocks of size m. Blocks are 1-based
   (block N doubles as block 0 in the cyclic conventions below). */
struct OrderedPartition {
    std::vector<std::vector<int>> blocks;   /* N blocks, each sorted, size m */

    int N() const { return static_cast<int>(blocks.size()); }
    int m() const { return blocks.empty() ? 0 : static_cast<int>(blocks[0].size()); }
    int nm() const { return N() * m(); }

    const std::vector<int>& block(int r) const;   /* r in 1..N; 0 maps to N */
    int block_of(int i) const;                    /* k_i in 1..N */
    int element(int r, int l) const;              /* i^r_l, 1-based l */

    /* Exchange two elements living in different blocks. */
    OrderedPartition swapped(int i, int j) const;
    /* Reversed partition: block j -> block (N - j) mod N, block N fixed. */
    OrderedPartition reversed() const;
    /* Permute blocks 1..N-1 by sigma (block N fixed); sigma has length N-1,
       entries a permutation of 1..N-1. */
    OrderedPartition permuted(const std::vector<int>& sigma) const;

    std::string to_string() const;
    bool operator==(const OrderedPartition& o) const { return blocks == o.blocks; }
    bool operator<(const OrderedPartition& o) const { return blocks < o.blocks; }
};

OrderedPartition make_partition(std::vector<std::vector<int>> blocks);

/* All ordered partitions for (N, m) in lexicographic order of their block
   lists; count = (Nm)!/(m!)^N, guarded against blowup. */
std::vector<OrderedPartition> enumerate_partitions(int N, int m,
                                                   std::size_t max_count = 1000000);

unsigned long long partition_count(int N, int m);   /* throws Overflow when huge */

/* All permutations of 1..n in lexicographic order. */
std::vector<std::vector<int>> all_permutations(int n);

} // namespace zn
