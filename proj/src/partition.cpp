#include "zn/partition.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

namespace zn {

const std::vector<int>& OrderedPartition::block(int r) const {
    int n = N();
    if (r == 0) r = n;
    if (r < 1 || r > n) fail("InvalidIndex", "block index out of range");
    return blocks[static_cast<std::size_t>(r - 1)];
}

int OrderedPartition::block_of(int i) const {
    for (int r = 1; r <= N(); ++r) {
        const auto& b = blocks[static_cast<std::size_t>(r - 1)];
        if (std::binary_search(b.begin(), b.end(), i)) return r;
    }
    fail("InvalidIndex", "element " + std::to_string(i) + " not in partition");
}

int OrderedPartition::element(int r, int l) const {
    const auto& b = block(r);
    if (l < 1 || l > static_cast<int>(b.size())) fail("InvalidIndex", "element index out of range");
    return b[static_cast<std::size_t>(l - 1)];
}

OrderedPartition OrderedPartition::swapped(int i, int j) const {
    int ri = block_of(i), rj = block_of(j);
    if (ri == rj) fail("BadIndices", "swap requires elements of different blocks");
    OrderedPartition out = *this;
    auto& bi = out.blocks[static_cast<std::size_t>(ri - 1)];
    auto& bj = out.blocks[static_cast<std::size_t>(rj - 1)];
    bi.erase(std::find(bi.begin(), bi.end(), i));
    bj.erase(std::find(bj.begin(), bj.end(), j));
    bi.insert(std::lower_bound(bi.begin(), bi.end(), j), j);
    bj.insert(std::lower_bound(bj.begin(), bj.end(), i), i);
    return out;
}

OrderedPartition OrderedPartition::reversed() const {
    int n = N();
    OrderedPartition out;
    out.blocks.resize(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) {
        int src = (n - j) % n;             /* block 0 means block N */
        if (src == 0) src = n;
        out.blocks[static_cast<std::size_t>(j - 1)] = block(src);
    }
    return out;
}

OrderedPartition OrderedPartition::permuted(const std::vector<int>& sigma) const {
    int n = N();
    if (static_cast<int>(sigma.size()) != n - 1) fail("BadIndices", "sigma length must be N-1");
    std::set<int> seen(sigma.begin(), sigma.end());
    if (static_cast<int>(seen.size()) != n - 1 || *seen.begin() < 1 || *seen.rbegin() > n - 1)
        fail("BadIndices", "sigma must permute 1..N-1");
    OrderedPartition out;
    out.blocks.resize(static_cast<std::size_t>(n));
    for (int j = 1; j <= n - 1; ++j)
        out.blocks[static_cast<std::size_t>(j - 1)] = block(sigma[static_cast<std::size_t>(j - 1)]);
    out.blocks[static_cast<std::size_t>(n - 1)] = block(n);
    return out;
}

std::string OrderedPartition::to_string() const {
    std::string s;
    for (const auto& b : blocks) {
        s += "{";
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(b[i]);
        }
        s += "}";
    }
    return s;
}

OrderedPartition make_partition(std::vector<std::vector<int>> blocks) {
    if (blocks.empty()) fail("BadIndices", "empty partition");
    OrderedPartition p;
    p.blocks = std::move(blocks);
    std::size_t msz = p.blocks[0].size();
    std::set<int> seen;
    for (auto& b : p.blocks) {
        if (b.size() != msz) fail("BadIndices", "blocks must share one size");
        std::sort(b.begin(), b.end());
        for (int v : b) {
            if (!seen.insert(v).second) fail("BadIndices", "repeated element in partition");
        }
    }
    int nm = p.nm();
    if (seen.empty() || *seen.begin() != 1 || *seen.rbegin() != nm ||
        static_cast<int>(seen.size()) != nm)
        fail("BadIndices", "partition must cover 1..N*m");
    return p;
}

unsigned long long partition_count(int N, int m) {
    /* (Nm)! / (m!)^N via incremental binomials to keep intermediates small */
    unsigned long long total = 1;
    int remaining = N * m;
    for (int b = 0; b < N; ++b) {
        /* choose m of the remaining for this block */
        unsigned long long c = 1;
        for (int i = 1; i <= m; ++i) {
            unsigned long long num = static_cast<unsigned long long>(remaining - m + i);
            c = c * num;
            c /= static_cast<unsigned long long>(i);
            if (c > (1ull << 62)) fail("Overflow", "partition count too large");
        }
        if (total > (1ull << 62) / (c ? c : 1)) fail("Overflow", "partition count too large");
        total *= c;
        remaining -= m;
    }
    return total;
}

std::vector<OrderedPartition> enumerate_partitions(int N, int m, std::size_t max_count) {
    if (N < 2 || m < 1) fail("BadCount", "need N >= 2, m >= 1");
    unsigned long long cnt = partition_count(N, m);
    if (cnt > max_count) fail("Overflow", "partition family exceeds the enumeration cap");

    std::vector<OrderedPartition> out;
    out.reserve(static_cast<std::size_t>(cnt));
    int nm = N * m;
    std::vector<std::vector<int>> blocks(static_cast<std::size_t>(N));
    std::vector<int> free_list(static_cast<std::size_t>(nm));
    std::iota(free_list.begin(), free_list.end(), 1);

    /* fill blocks in order; within a block, choose ascending combinations */
    std::vector<std::vector<int>> chosen(static_cast<std::size_t>(N));
    std::function<void(int, std::vector<int>&)> rec = [&](int b, std::vector<int>& avail) {
        if (b == N) {
            OrderedPartition p;
            p.blocks = chosen;
            out.push_back(std::move(p));
            return;
        }
        std::vector<int> idx(static_cast<std::size_t>(m));
        std::function<void(int, int)> pick = [&](int start, int depth) {
            if (depth == m) {
                std::vector<int> rest;
                rest.reserve(avail.size() - static_cast<std::size_t>(m));
                std::vector<char> used(avail.size(), 0);
                for (int d = 0; d < m; ++d) used[static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])] = 1;
                chosen[static_cast<std::size_t>(b)].clear();
                for (int d = 0; d < m; ++d)
                    chosen[static_cast<std::size_t>(b)].push_back(avail[static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])]);
                for (std::size_t i = 0; i < avail.size(); ++i)
                    if (!used[i]) rest.push_back(avail[i]);
                rec(b + 1, rest);
                return;
            }
            for (int i = start; i <= static_cast<int>(avail.size()) - (m - depth); ++i) {
                idx[static_cast<std::size_t>(depth)] = i;
                pick(i + 1, depth + 1);
            }
        };
        pick(0, 0);
    };
    rec(0, free_list);
    return out;
}

std::vector<std::vector<int>> all_permutations(int n) {
    std::vector<int> cur(static_cast<std::size_t>(n));
    std::iota(cur.begin(), cur.end(), 1);
    std::vector<std::vector<int>> out;
    do {
        out.push_back(cur);
    } while (std::next_permutation(cur.begin(), cur.end()));
    return out;
}

} // namespace zn
