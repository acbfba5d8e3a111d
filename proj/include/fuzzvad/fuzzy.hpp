#pragma once

// Interval type-2 fuzzy representation of valence/arousal/dominance ratings.
//
// Each dimension is partitioned into Low/Med/High terms. A term has two
// truncated Gaussians: the upper membership function (generic meaning of the
// term) and the lower membership function (population statistics). Both use
// exp(-(x-M)^2 / sigma^2) and are exactly zero outside their support range.

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include <json.hpp>

namespace fuzzvad {

inline constexpr double kScaleMin = 1.0;
inline constexpr double kScaleMax = 9.0;

enum class Dimension { Valence = 0, Arousal = 1, Dominance = 2 };
enum class Term { Low = 0, Med = 1, High = 2 };
enum class Family { Umf, Lmf };

inline constexpr std::array<Dimension, 3> kDimensions{Dimension::Valence, Dimension::Arousal,
                                                       Dimension::Dominance};
inline constexpr std::array<Term, 3> kTerms{Term::Low, Term::Med, Term::High};

std::string_view to_string(Dimension d);
std::string_view to_string(Term t);

/// Crisp self-reported rating, each component on the closed 1..9 scale.
class VadRating {
public:
    VadRating() = default;
    /// Throws DomainError when a component is outside [1, 9] or not finite.
    VadRating(double valence, double arousal, double dominance);

    double valence() const noexcept { return v_[0]; }
    double arousal() const noexcept { return v_[1]; }
    double dominance() const noexcept { return v_[2]; }
    double operator[](Dimension d) const noexcept { return v_[static_cast<std::size_t>(d)]; }
    const std::array<double, 3>& values() const noexcept { return v_; }

    bool operator==(const VadRating&) const = default;

private:
    std::array<double, 3> v_{kScaleMin, kScaleMin, kScaleMin};
};

struct TermParams {
    double mean = 0.0;
    double sigma = 1.0;
    double range_lo = kScaleMin;
    double range_hi = kScaleMax;

    void validate() const;
    bool operator==(const TermParams&) const = default;
};

struct DimensionMembershipSpec {
    Dimension dimension = Dimension::Valence;
    std::array<TermParams, 3> umf;  // indexed by Term
    std::array<TermParams, 3> lmf;

    const TermParams& get(Family f, Term t) const {
        return (f == Family::Umf ? umf : lmf)[static_cast<std::size_t>(t)];
    }
    void validate() const;
    bool operator==(const DimensionMembershipSpec&) const = default;
};

/// Which mean moves when the footprint of uncertainty is formed.
enum class MeanAnchor {
    UmfToLmf,  // upper function is re-centred on the population mean (default)
    LmfToUmf,
};

/// Full parameter set for the three dimensions.
struct MembershipParams {
    std::array<DimensionMembershipSpec, 3> dimensions;
    MeanAnchor anchor = MeanAnchor::UmfToLmf;

    const DimensionMembershipSpec& operator[](Dimension d) const {
        return dimensions[static_cast<std::size_t>(d)];
    }

    /// Published defaults: generic upper functions at 1/5/9 with sigma 1.2,
    /// population-fitted lower functions, and the documented support cutoffs.
    static MembershipParams defaults();

    void validate() const;
    bool operator==(const MembershipParams&) const = default;
};

void to_json(nlohmann::json& j, const MembershipParams& p);
/// Missing keys keep their default value; unknown keys are rejected.
void from_json(const nlohmann::json& j, MembershipParams& p);
MembershipParams load_membership_params(const std::string& path);

/// Upper membership function of one term, as published (no FoU adjustment).
double eval_umf(double x, const TermParams& params, Term term);

/// Lower membership function: Low has a plateau of 1 for x <= M, High for
/// x >= M, Med is a plain truncated Gaussian.
double eval_lmf(double x, const TermParams& params, Term term);

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Footprint of uncertainty for one dimension.
///
/// The two curves of each term are re-centred on a common mean, then the
/// interval is the pointwise min/max of the pair so lower <= upper holds
/// everywhere. Re-centred shoulder terms (Low/High) keep the shoulder shape
/// the original upper function has on [1, 9]: a plateau of 1 beyond the mean.
class FouEnvelope {
public:
    FouEnvelope() = default;
    FouEnvelope(const DimensionMembershipSpec& spec, MeanAnchor anchor);

    Interval eval(double x, Term term) const;
    /// Degree of the re-centred upper function alone.
    double adjusted_upper(double x, Term term) const;
    double adjusted_lower(double x, Term term) const;
    /// Common mean of a term after adjustment.
    double mean(Term term) const { return adjusted_.umf[static_cast<std::size_t>(term)].mean; }
    const DimensionMembershipSpec& adjusted_spec() const { return adjusted_; }

private:
    DimensionMembershipSpec adjusted_;
};

FouEnvelope adjust_fou(const DimensionMembershipSpec& spec, MeanAnchor anchor = MeanAnchor::UmfToLmf);

/// 18 interval bounds ordered (V, A, D) x (Low, Med, High) x (lower, upper).
class Type2FuzzyVector {
public:
    static constexpr std::size_t kSize = 18;

    static constexpr std::size_t index(Dimension d, Term t, bool upper) {
        return static_cast<std::size_t>(d) * 6 + static_cast<std::size_t>(t) * 2 + (upper ? 1 : 0);
    }

    double& at(Dimension d, Term t, bool upper) { return entries[index(d, t, upper)]; }
    double at(Dimension d, Term t, bool upper) const { return entries[index(d, t, upper)]; }
    Interval interval(Dimension d, Term t) const { return {at(d, t, false), at(d, t, true)}; }

    /// Column names, e.g. "valence_low_lower".
    static std::array<std::string, kSize> names();

    std::array<double, kSize> entries{};
};

/// Type-1 degrees ordered (V, A, D) x (Low, Med, High).
using Type1FuzzyVector = std::array<double, 9>;

/// Precomputed envelopes for all dimensions.
class Fuzzifier {
public:
    explicit Fuzzifier(MembershipParams params = MembershipParams::defaults());

    Type2FuzzyVector type2(const VadRating& rating) const;
    Type1FuzzyVector type1(const VadRating& rating, Family which) const;

    const FouEnvelope& envelope(Dimension d) const { return envelopes_[static_cast<std::size_t>(d)]; }
    const MembershipParams& params() const { return params_; }

    static std::array<std::string, 9> type1_names(Family which);

private:
    MembershipParams params_;
    std::array<FouEnvelope, 3> envelopes_;
};

Type2FuzzyVector fuzzify_type2(const VadRating& rating,
                               const MembershipParams& params = MembershipParams::defaults());
Type1FuzzyVector fuzzify_type1(const VadRating& rating, Family which,
                               const MembershipParams& params = MembershipParams::defaults());

}  // namespace fuzzvad
