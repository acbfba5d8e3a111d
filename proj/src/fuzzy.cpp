#include "fuzzvad/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "fuzzvad/error.hpp"

namespace fuzzvad {

namespace {

void check_scale(double x, const char* what) {
    if (!std::isfinite(x) || x < kScaleMin || x > kScaleMax) {
        throw DomainError(fmt::format("{} = {} is outside the rating scale [1, 9]", what, x));
    }
}

double gaussian(double x, double mean, double sigma) {
    const double d = x - mean;
    return std::exp(-(d * d) / (sigma * sigma));
}

bool in_support(double x, const TermParams& p) { return x >= p.range_lo && x <= p.range_hi; }

TermParams term(double mean, double sigma, double lo, double hi) { return {mean, sigma, lo, hi}; }

DimensionMembershipSpec make_dimension(Dimension d, std::array<double, 6> lmf_stats) {
    DimensionMembershipSpec s;
    s.dimension = d;
    s.umf = {term(1.0, 1.2, 1.0, 4.5), term(5.0, 1.2, 2.0, 8.0), term(9.0, 1.2, 5.5, 9.0)};
    s.lmf = {term(lmf_stats[0], lmf_stats[1], 1.0, 3.5), term(lmf_stats[2], lmf_stats[3], 2.5, 7.5),
             term(lmf_stats[4], lmf_stats[5], 6.5, 9.0)};
    return s;
}

constexpr std::array<const char*, 3> kDimensionKeys{"valence", "arousal", "dominance"};
constexpr std::array<const char*, 3> kTermKeys{"low", "med", "high"};

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                    std::string_view where) {
    if (!j.is_object()) throw DomainError(fmt::format("membership params: '{}' must be an object", where));
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw DomainError(fmt::format("membership params: unknown key '{}' in {}", it.key(), where));
        }
    }
}

}  // namespace

std::string_view to_string(Dimension d) {
    switch (d) {
        case Dimension::Valence: return "valence";
        case Dimension::Arousal: return "arousal";
        case Dimension::Dominance: return "dominance";
    }
    return "?";
}

std::string_view to_string(Term t) {
    switch (t) {
        case Term::Low: return "low";
        case Term::Med: return "med";
        case Term::High: return "high";
    }
    return "?";
}

VadRating::VadRating(double valence, double arousal, double dominance) : v_{valence, arousal, dominance} {
    check_scale(valence, "valence");
    check_scale(arousal, "arousal");
    check_scale(dominance, "dominance");
}

void TermParams::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError(fmt::format("sigma must be > 0, got {}", sigma));
    if (!std::isfinite(mean)) throw DomainError("term mean must be finite");
    if (!(range_lo <= range_hi)) {
        throw DomainError(fmt::format("support [{}, {}] is empty", range_lo, range_hi));
    }
    if (range_lo < kScaleMin || range_hi > kScaleMax) {
        throw DomainError(fmt::format("support [{}, {}] leaves the scale [1, 9]", range_lo, range_hi));
    }
}

void DimensionMembershipSpec::validate() const {
    for (const auto& p : umf) p.validate();
    for (const auto& p : lmf) p.validate();
}

MembershipParams MembershipParams::defaults() {
    MembershipParams p;
    p.dimensions = {
        make_dimension(Dimension::Valence, {1.96, 0.92, 4.30, 1.97, 7.63, 0.92}),
        make_dimension(Dimension::Arousal, {2.8, 1.02, 6.04, 1.54, 7.26, 0.90}),
        make_dimension(Dimension::Dominance, {2.40, 1.01, 5.02, 1.81, 7.27, 0.90}),
    };
    return p;
}

void MembershipParams::validate() const {
    for (std::size_t i = 0; i < dimensions.size(); ++i) {
        if (dimensions[i].dimension != kDimensions[i]) throw DomainError("membership dimensions out of order");
        dimensions[i].validate();
    }
}

void to_json(nlohmann::json& j, const MembershipParams& p) {
    j = nlohmann::json::object();
    for (std::size_t d = 0; d < 3; ++d) {
        nlohmann::json dim;
        for (auto [fam, key] : {std::pair{Family::Umf, "umf"}, std::pair{Family::Lmf, "lmf"}}) {
            nlohmann::json terms;
            for (std::size_t t = 0; t < 3; ++t) {
                const auto& tp = p.dimensions[d].get(fam, kTerms[t]);
                terms[kTermKeys[t]] = {{"mean", tp.mean},
                                       {"sigma", tp.sigma},
                                       {"range_lo", tp.range_lo},
                                       {"range_hi", tp.range_hi}};
            }
            dim[key] = terms;
        }
        j[kDimensionKeys[d]] = dim;
    }
    j["mean_anchor"] = p.anchor == MeanAnchor::UmfToLmf ? "umf_to_lmf" : "lmf_to_umf";
}

void from_json(const nlohmann::json& j, MembershipParams& p) {
    reject_unknown(j, {"valence", "arousal", "dominance", "mean_anchor"}, "membership params");
    for (std::size_t d = 0; d < 3; ++d) {
        if (!j.contains(kDimensionKeys[d])) continue;
        const auto& dim = j.at(kDimensionKeys[d]);
        reject_unknown(dim, {"umf", "lmf"}, kDimensionKeys[d]);
        for (auto [fam, key] : {std::pair{Family::Umf, "umf"}, std::pair{Family::Lmf, "lmf"}}) {
            if (!dim.contains(key)) continue;
            const auto& terms = dim.at(key);
            reject_unknown(terms, {"low", "med", "high"}, key);
            auto& arr = fam == Family::Umf ? p.dimensions[d].umf : p.dimensions[d].lmf;
            for (std::size_t t = 0; t < 3; ++t) {
                if (!terms.contains(kTermKeys[t])) continue;
                const auto& tj = terms.at(kTermKeys[t]);
                reject_unknown(tj, {"mean", "sigma", "range_lo", "range_hi"}, kTermKeys[t]);
                auto& tp = arr[t];
                tp.mean = tj.value("mean", tp.mean);
                tp.sigma = tj.value("sigma", tp.sigma);
                tp.range_lo = tj.value("range_lo", tp.range_lo);
                tp.range_hi = tj.value("range_hi", tp.range_hi);
            }
        }
    }
    if (j.contains("mean_anchor")) {
        const auto a = j.at("mean_anchor").get<std::string>();
        if (a == "umf_to_lmf") p.anchor = MeanAnchor::UmfToLmf;
        else if (a == "lmf_to_umf") p.anchor = MeanAnchor::LmfToUmf;
        else throw DomainError(fmt::format("unknown mean_anchor '{}'", a));
    }
    p.validate();
}

MembershipParams load_membership_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open membership params '{}'", path));
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(fmt::format("{}: {}", path, e.what()));
    }
    auto p = MembershipParams::defaults();
    from_json(j, p);
    return p;
}

double eval_umf(double x, const TermParams& params, Term) {
    check_scale(x, "x");
    if (!in_support(x, params)) return 0.0;
    return gaussian(x, params.mean, params.sigma);
}

double eval_lmf(double x, const TermParams& params, Term term) {
    check_scale(x, "x");
    if (!in_support(x, params)) return 0.0;
    if (term == Term::Low && x <= params.mean) return 1.0;
    if (term == Term::High && x >= params.mean) return 1.0;
    return gaussian(x, params.mean, params.sigma);
}

FouEnvelope::FouEnvelope(const DimensionMembershipSpec& spec, MeanAnchor anchor) : adjusted_(spec) {
    spec.validate();
    for (std::size_t t = 0; t < 3; ++t) {
        if (anchor == MeanAnchor::UmfToLmf) {
            adjusted_.umf[t].mean = spec.lmf[t].mean;
        } else {
            adjusted_.lmf[t].mean = spec.umf[t].mean;
        }
    }
}

double FouEnvelope::adjusted_upper(double x, Term term) const {
    return eval_lmf(x, adjusted_.umf[static_cast<std::size_t>(term)], term);
}

double FouEnvelope::adjusted_lower(double x, Term term) const {
    return eval_lmf(x, adjusted_.lmf[static_cast<std::size_t>(term)], term);
}

Interval FouEnvelope::eval(double x, Term term) const {
    const double a = adjusted_upper(x, term);
    const double b = adjusted_lower(x, term);
    return {std::min(a, b), std::max(a, b)};
}

FouEnvelope adjust_fou(const DimensionMembershipSpec& spec, MeanAnchor anchor) { return FouEnvelope(spec, anchor); }

std::array<std::string, Type2FuzzyVector::kSize> Type2FuzzyVector::names() {
    std::array<std::string, kSize> out;
    for (auto d : kDimensions) {
        for (auto t : kTerms) {
            out[index(d, t, false)] = fmt::format("{}_{}_lower", to_string(d), to_string(t));
            out[index(d, t, true)] = fmt::format("{}_{}_upper", to_string(d), to_string(t));
        }
    }
    return out;
}

Fuzzifier::Fuzzifier(MembershipParams params) : params_(std::move(params)) {
    params_.validate();
    for (std::size_t d = 0; d < 3; ++d) envelopes_[d] = FouEnvelope(params_.dimensions[d], params_.anchor);
}

Type2FuzzyVector Fuzzifier::type2(const VadRating& rating) const {
    Type2FuzzyVector out;
    for (auto d : kDimensions) {
        const auto& env = envelope(d);
        for (auto t : kTerms) {
            const auto iv = env.eval(rating[d], t);
            out.at(d, t, false) = iv.lower;
            out.at(d, t, true) = iv.upper;
        }
    }
    return out;
}

Type1FuzzyVector Fuzzifier::type1(const VadRating& rating, Family which) const {
    Type1FuzzyVector out{};
    for (auto d : kDimensions) {
        const auto& spec = params_[d];
        for (auto t : kTerms) {
            const auto& tp = spec.get(which, t);
            const double x = rating[d];
            out[static_cast<std::size_t>(d) * 3 + static_cast<std::size_t>(t)] =
                which == Family::Umf ? eval_umf(x, tp, t) : eval_lmf(x, tp, t);
        }
    }
    return out;
}

std::array<std::string, 9> Fuzzifier::type1_names(Family which) {
    std::array<std::string, 9> out;
    const char* fam = which == Family::Umf ? "umf" : "lmf";
    for (auto d : kDimensions) {
        for (auto t : kTerms) {
            out[static_cast<std::size_t>(d) * 3 + static_cast<std::size_t>(t)] =
                fmt::format("{}_{}_{}", to_string(d), to_string(t), fam);
        }
    }
    return out;
}

Type2FuzzyVector fuzzify_type2(const VadRating& rating, const MembershipParams& params) {
    return Fuzzifier(params).type2(rating);
}

Type1FuzzyVector fuzzify_type1(const VadRating& rating, Family which, const MembershipParams& params) {
    return Fuzzifier(params).type1(rating, which);
}

}  // namespace fuzzvad
