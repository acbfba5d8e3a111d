#pragma once

// 27-cell Low/Med/High partition of the VAD cube.
//
// Cell index = 9 * valence_level + 3 * arousal_level + dominance_level with
// levels Low = 0, Med = 1, High = 2. A dimension's level is the term whose
// re-centred upper membership is largest at that value; ties go to Med.

#include <array>
#include <span>

#include "fuzzvad/fuzzy.hpp"

namespace fuzzvad {

inline constexpr int kCuboidCount = 27;

struct CuboidIndex {
    int index = 0;

    static CuboidIndex from_levels(Term v, Term a, Term d);
    std::array<Term, 3> levels() const;
    bool operator==(const CuboidIndex&) const = default;
};

CuboidIndex vad_to_cuboid(const VadRating& rating, const Fuzzifier& fuzzifier);
CuboidIndex vad_to_cuboid(const VadRating& rating);

/// Per-dimension level chosen by vad_to_cuboid.
Term dominant_term(double x, const FouEnvelope& envelope);

using LatticeDistribution = std::array<double, kCuboidCount>;

/// Max-shifted softmax over 27 logits. Throws NumericError on non-finite input.
LatticeDistribution lattice_softmax(std::span<const double> logits);

}  // namespace fuzzvad
