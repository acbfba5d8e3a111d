#include "fuzzvad/lattice.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fuzzvad/error.hpp"

namespace fuzzvad {

CuboidIndex CuboidIndex::from_levels(Term v, Term a, Term d) {
    return {9 * static_cast<int>(v) + 3 * static_cast<int>(a) + static_cast<int>(d)};
}

std::array<Term, 3> CuboidIndex::levels() const {
    return {static_cast<Term>(index / 9), static_cast<Term>((index / 3) % 3), static_cast<Term>(index % 3)};
}

Term dominant_term(double x, const FouEnvelope& envelope) {
    const double low = envelope.adjusted_upper(x, Term::Low);
    const double med = envelope.adjusted_upper(x, Term::Med);
    const double high = envelope.adjusted_upper(x, Term::High);
    if (med >= low && med >= high) return Term::Med;
    return low > high ? Term::Low : Term::High;
}

CuboidIndex vad_to_cuboid(const VadRating& rating, const Fuzzifier& fuzzifier) {
    return CuboidIndex::from_levels(dominant_term(rating.valence(), fuzzifier.envelope(Dimension::Valence)),
                                    dominant_term(rating.arousal(), fuzzifier.envelope(Dimension::Arousal)),
                                    dominant_term(rating.dominance(), fuzzifier.envelope(Dimension::Dominance)));
}

CuboidIndex vad_to_cuboid(const VadRating& rating) {
    static const Fuzzifier fuzzifier;
    return vad_to_cuboid(rating, fuzzifier);
}

LatticeDistribution lattice_softmax(std::span<const double> logits) {
    if (logits.size() != kCuboidCount) {
        throw DomainError(fmt::format("lattice softmax expects {} logits, got {}", kCuboidCount, logits.size()));
    }
    for (double z : logits) {
        if (!std::isfinite(z)) throw NumericError("lattice softmax: non-finite logit");
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    LatticeDistribution p{};
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - peak);
        total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
}

}  // namespace fuzzvad
