#pragma once

#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "sd/errors.hpp"

namespace sd {

using BigInt = boost::multiprecision::cpp_int;

// An order-preserving interleaving of blocks p0,...,pn. The assignment lists,
// for each output position, the block it came from; relative order within a
// block is implied by occurrence order.
struct Shuffling {
    std::vector<int> block_sizes;
    std::vector<int> assignment;

    bool operator==(const Shuffling&) const = default;
};

Shuffling make_shuffling(std::vector<int> block_sizes, std::vector<int> assignment);
Shuffling identity_shuffling(int n);

// (sum p_i)! / prod p_i!
BigInt shuffle_count(const std::vector<int>& blocks);

// All distinct shufflings in lexicographic order of the assignment.
// Guarded: sum of blocks must be <= 14.
std::vector<Shuffling> enumerate_shufflings(const std::vector<int>& blocks);

// Substitutes `inner` for block `position` of `outer`.
Shuffling compose(const Shuffling& outer, std::size_t position,
                  const Shuffling& inner);

// Unique factorization through the contiguous block range [lo, hi]:
// compose(outer, lo, inner) == s.
std::pair<Shuffling, Shuffling> factor(const Shuffling& s, std::size_t lo,
                                       std::size_t hi);

} // namespace sd
