#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "fuzzvad/clustering.hpp"
#include "fuzzvad/data.hpp"
#include "fuzzvad/dsp.hpp"
#include "fuzzvad/error.hpp"
#include "fuzzvad/fuzzy.hpp"
#include "fuzzvad/lattice.hpp"
#include "fuzzvad/models.hpp"

namespace py = pybind11;
using namespace fuzzvad;
using nlohmann::json;

namespace {

MembershipParams params_from(const std::string& text) {
    if (text.empty()) return MembershipParams::defaults();
    return json::parse(text).get<MembershipParams>();
}

Family family_from(const std::string& name) {
    if (name == "umf") return Family::Umf;
    if (name == "lmf") return Family::Lmf;
    throw DomainError("family must be 'umf' or 'lmf'");
}

py::dict fcm_dict(const FcmResult& r) {
    py::dict d;
    d["centroids"] = r.centroids;
    std::vector<std::vector<double>> u(r.memberships.rows());
    for (std::size_t i = 0; i < u.size(); ++i) u[i].assign(r.memberships.row(i).begin(), r.memberships.row(i).end());
    d["memberships"] = u;
    d["objective_trace"] = r.objective_trace;
    d["iterations"] = r.iterations_run;
    d["assignments"] = r.hard_assignments();
    return d;
}

FcmConfig fcm_config(int clusters, double m, std::uint64_t seed, double tol, int max_iter) {
    FcmConfig c;
    c.clusters = clusters;
    c.fuzzifier = m;
    c.seed = seed;
    c.tolerance = tol;
    c.max_iterations = max_iter;
    return c;
}

}  // namespace

PYBIND11_MODULE(_fuzzvad, m) {
    m.doc() = "Fuzzy VAD emotion recognition core";

    auto& base = py::register_exception<Error>(m, "FuzzvadError");
    py::register_exception<UsageError>(m, "UsageError", base);
    py::register_exception<IoError>(m, "IoError", base);
    static auto& domain = py::register_exception<DomainError>(m, "DomainError", base);
    py::register_exception<NumericError>(m, "NumericError", base);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const json::exception& e) {
            py::set_error(domain, e.what());
        }
    });

    // fuzzy core
    m.def("membership_defaults", [] { return json(MembershipParams::defaults()).dump(); });
    m.def(
        "fuzzify_type2",
        [](double v, double a, double d, const std::string& params) {
            const auto r = fuzzify_type2(VadRating(v, a, d), params_from(params));
            return std::vector<double>(r.entries.begin(), r.entries.end());
        },
        py::arg("valence"), py::arg("arousal"), py::arg("dominance"), py::arg("params") = "");
    m.def(
        "fuzzify_type1",
        [](double v, double a, double d, const std::string& family, const std::string& params) {
            const auto r = fuzzify_type1(VadRating(v, a, d), family_from(family), params_from(params));
            return std::vector<double>(r.begin(), r.end());
        },
        py::arg("valence"), py::arg("arousal"), py::arg("dominance"), py::arg("family"), py::arg("params") = "");
    m.def("type2_names", [] {
        const auto n = Type2FuzzyVector::names();
        return std::vector<std::string>(n.begin(), n.end());
    });
    m.def(
        "envelope",
        [](const std::string& dimension, const std::string& term, double x) {
            static const std::map<std::string, Dimension> dims{
                {"valence", Dimension::Valence}, {"arousal", Dimension::Arousal}, {"dominance", Dimension::Dominance}};
            static const std::map<std::string, Term> terms{{"low", Term::Low}, {"med", Term::Med}, {"high", Term::High}};
            if (!dims.count(dimension) || !terms.count(term)) throw DomainError("unknown dimension or term");
            const Fuzzifier f;
            const auto iv = f.envelope(dims.at(dimension)).eval(x, terms.at(term));
            return std::make_pair(iv.lower, iv.upper);
        },
        py::arg("dimension"), py::arg("term"), py::arg("x"));
    m.def(
        "vad_to_cuboid", [](double v, double a, double d) { return vad_to_cuboid(VadRating(v, a, d)).index; },
        py::arg("valence"), py::arg("arousal"), py::arg("dominance"));

    // clustering
    m.def(
        "fcm_fit",
        [](const std::vector<Point3>& pts, int clusters, double m, std::uint64_t seed, double tol, int max_iter) {
            return fcm_dict(fcm_fit(pts, fcm_config(clusters, m, seed, tol, max_iter)));
        },
        py::arg("points"), py::arg("clusters") = 4, py::arg("fuzzifier") = 2.0, py::arg("seed") = 0,
        py::arg("tolerance") = 1e-6, py::arg("max_iterations") = 300);
    m.def(
        "sweep_clusters",
        [](const std::vector<Point3>& pts, int c_min, int c_max, double m, std::uint64_t seed) {
            std::vector<std::pair<int, double>> rows;
            for (const auto& r : sweep_clusters(pts, c_min, c_max, fcm_config(c_min, m, seed, 1e-6, 300)))
                rows.emplace_back(r.clusters, r.silhouette);
            return rows;
        },
        py::arg("points"), py::arg("c_min") = 2, py::arg("c_max") = 10, py::arg("fuzzifier") = 2.0,
        py::arg("seed") = 0);

    // signal processing
    m.def(
        "butterworth_response",
        [](const std::vector<double>& freqs, int order, double lo, double hi, double fs) {
            const auto sos = design_butterworth_bandpass(order, lo, hi, fs);
            std::vector<double> out;
            for (double f : freqs) out.push_back(std::abs(sos.response(f, fs)));
            return out;
        },
        py::arg("frequencies"), py::arg("order") = 5, py::arg("low_hz") = 1.0, py::arg("high_hz") = 40.0,
        py::arg("sample_rate") = 250.0);
    m.def(
        "bandpass",
        [](const std::vector<double>& x, int order, double lo, double hi, double fs, bool zero_phase) {
            const auto sos = design_butterworth_bandpass(order, lo, hi, fs);
            return zero_phase ? sos.filter_zero_phase(x) : sos.filter(x);
        },
        py::arg("signal"), py::arg("order") = 5, py::arg("low_hz") = 1.0, py::arg("high_hz") = 40.0,
        py::arg("sample_rate") = 250.0, py::arg("zero_phase") = false);
    m.def(
        "stft",
        [](const std::vector<double>& x, std::size_t window, std::size_t hop, std::size_t nfft) {
            StftConfig c;
            c.window_length = window;
            c.hop = hop;
            c.fft_length = nfft;
            const auto s = stft(x, c);
            std::vector<std::vector<std::complex<double>>> out(s.bins, std::vector<std::complex<double>>(s.frames));
            for (std::size_t m = 0; m < s.bins; ++m)
                for (std::size_t n = 0; n < s.frames; ++n) out[m][n] = s.at(m, n);
            return out;
        },
        py::arg("signal"), py::arg("window_length") = 128, py::arg("hop") = 64, py::arg("fft_length") = 128);
    m.def(
        "spectrogram_shape",
        [](std::size_t channels, std::size_t samples, double fs, double max_hz) {
            const auto st = spectrogram_stack(EegRecording(channels, samples, fs), StftConfig{}, max_hz);
            return std::make_tuple(st.channels, st.bins, st.frames);
        },
        py::arg("channels"), py::arg("samples"), py::arg("sample_rate") = 250.0, py::arg("max_hz") = 40.0);

    // data and models
    m.def(
        "synth_generate",
        [](const std::string& config, const std::string& out_dir) {
            const auto cfg = json::parse(config.empty() ? "{}" : config).get<SynthConfig>();
            return synth_generate(cfg, out_dir).manifest_path;
        },
        py::arg("config"), py::arg("out_dir"));
    m.def(
        "manifest_stats",
        [](const std::string& path) {
            const auto ds = load_manifest(path);
            const auto st = ds.stats();
            py::dict d;
            d["size"] = ds.size();
            d["per_label"] = st.per_label;
            d["per_participant"] = st.per_participant;
            return d;
        },
        py::arg("path"));
    m.def(
        "parameter_count",
        [](const std::string& config) {
            const auto cfg = json::parse(config.empty() ? "{}" : config).get<ModelConfig>();
            return EmotionModel::expected_parameter_count(cfg, InputShape{});
        },
        py::arg("config") = "");
    m.def(
        "run_experiment",
        [](const std::string& manifest, const std::string& config) {
            const auto cfg = json::parse(config.empty() ? "{}" : config).get<ModelConfig>();
            py::gil_scoped_release release;
            const auto ds = load_manifest(manifest);
            return json(run_experiment(ds, cfg).report).dump();
        },
        py::arg("manifest"), py::arg("config") = "");
    m.def("cross_subject_groups", [] {
        std::vector<py::dict> out;
        for (const auto& g : cross_subject_groups()) {
            py::dict d;
            d["name"] = g.name;
            std::vector<std::pair<std::string, std::size_t>> members;
            for (const auto& mem : g.members) members.emplace_back(mem.emotion, mem.events);
            d["members"] = members;
            d["published_total"] = g.published_total;
            out.push_back(d);
        }
        return out;
    });
}
