#include "sd/shuffle.hpp"

#include <numeric>

namespace sd {

Shuffling make_shuffling(std::vector<int> block_sizes,
                         std::vector<int> assignment) {
    std::vector<int> seen(block_sizes.size(), 0);
    for (int b : assignment) {
        if (b < 0 || b >= (int)block_sizes.size())
            throw validation_error("assignment references unknown block " +
                                   std::to_string(b));
        ++seen[b];
    }
    for (std::size_t i = 0; i < block_sizes.size(); ++i) {
        if (block_sizes[i] < 0)
            throw validation_error("negative block size");
        if (seen[i] != block_sizes[i])
            throw validation_error("block " + std::to_string(i) + " occurs " +
                                   std::to_string(seen[i]) + " times, size is " +
                                   std::to_string(block_sizes[i]));
    }
    return Shuffling{std::move(block_sizes), std::move(assignment)};
}

Shuffling identity_shuffling(int n) {
    return Shuffling{{n}, std::vector<int>(n, 0)};
}

BigInt shuffle_count(const std::vector<int>& blocks) {
    int total = 0;
    for (int b : blocks) {
        if (b < 0) throw validation_error("negative block size");
        total += b;
    }
    BigInt result = 1;
    for (int i = 2; i <= total; ++i) result *= i;
    for (int b : blocks)
        for (int i = 2; i <= b; ++i) result /= i;
    return result;
}

namespace {

void enumerate_rec(std::vector<int>& remaining, std::vector<int>& prefix,
                   std::size_t total, std::vector<Shuffling>& out,
                   const std::vector<int>& blocks) {
    if (prefix.size() == total) {
        out.push_back(Shuffling{blocks, prefix});
        return;
    }
    for (std::size_t b = 0; b < remaining.size(); ++b) {
        if (remaining[b] == 0) continue;
        --remaining[b];
        prefix.push_back((int)b);
        enumerate_rec(remaining, prefix, total, out, blocks);
        prefix.pop_back();
        ++remaining[b];
    }
}

} // namespace

std::vector<Shuffling> enumerate_shufflings(const std::vector<int>& blocks) {
    int total = std::accumulate(blocks.begin(), blocks.end(), 0);
    if (total > 14)
        throw validation_error("enumerate_shufflings: total size " +
                               std::to_string(total) + " exceeds the guard (14)");
    std::vector<int> remaining = blocks;
    std::vector<int> prefix;
    std::vector<Shuffling> out;
    enumerate_rec(remaining, prefix, (std::size_t)total, out, blocks);
    return out;
}

Shuffling compose(const Shuffling& outer, std::size_t position,
                  const Shuffling& inner) {
    if (position >= outer.block_sizes.size())
        throw validation_error("compose: block position out of range");
    int inner_total = (int)inner.assignment.size();
    if (outer.block_sizes[position] != inner_total)
        throw validation_error(
            "compose: inner length " + std::to_string(inner_total) +
            " does not match block size " +
            std::to_string(outer.block_sizes[position]));
    std::vector<int> blocks;
    for (std::size_t i = 0; i < outer.block_sizes.size(); ++i) {
        if (i == position)
            blocks.insert(blocks.end(), inner.block_sizes.begin(),
                          inner.block_sizes.end());
        else
            blocks.push_back(outer.block_sizes[i]);
    }
    auto renumber = [&](int b) {
        if ((std::size_t)b < position) return b;
        return b + (int)inner.block_sizes.size() - 1;
    };
    std::vector<int> assignment;
    std::size_t occurrence = 0;
    for (int b : outer.assignment) {
        if ((std::size_t)b == position)
            assignment.push_back((int)position + inner.assignment[occurrence++]);
        else
            assignment.push_back(renumber(b));
    }
    return make_shuffling(std::move(blocks), std::move(assignment));
}

std::pair<Shuffling, Shuffling> factor(const Shuffling& s, std::size_t lo,
                                       std::size_t hi) {
    if (lo > hi || hi >= s.block_sizes.size())
        throw validation_error("factor: invalid block range");
    std::vector<int> inner_blocks(s.block_sizes.begin() + lo,
                                  s.block_sizes.begin() + hi + 1);
    int group_size = std::accumulate(inner_blocks.begin(), inner_blocks.end(), 0);
    std::vector<int> outer_blocks;
    for (std::size_t i = 0; i < s.block_sizes.size(); ++i) {
        if (i == lo) outer_blocks.push_back(group_size);
        if (i < lo || i > hi) outer_blocks.push_back(s.block_sizes[i]);
    }
    std::vector<int> inner_assignment, outer_assignment;
    for (int b : s.assignment) {
        if ((std::size_t)b >= lo && (std::size_t)b <= hi) {
            inner_assignment.push_back(b - (int)lo);
            outer_assignment.push_back((int)lo);
        } else if ((std::size_t)b < lo) {
            outer_assignment.push_back(b);
        } else {
            outer_assignment.push_back(b - (int)(hi - lo));
        }
    }
    Shuffling inner = make_shuffling(std::move(inner_blocks),
                                     std::move(inner_assignment));
    Shuffling outer = make_shuffling(std::move(outer_blocks),
                                     std::move(outer_assignment));
    return {outer, inner};
}

} // namespace sd
