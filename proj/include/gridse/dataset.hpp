#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridse/powerflow.hpp"

namespace gridse {

/// One scenario: the true state, the exact measurement vector, and the
/// noisy (possibly outlier-corrupted) vector actually handed to estimators.
struct MeasurementSample {
    StateVector true_state;
    VectorXd z_clean;
    VectorXd z;
    std::vector<MeasurementMeta> meta;
};

struct DatasetSplit {
    std::vector<int> train;
    std::vector<int> test;
    bool degenerate = false;  // one side empty
};

struct Dataset {
    std::string case_id;
    std::uint64_t seed = 0;
    double sigma = 0.0;
    double eta = 0.0;
    double k = 1.0;
    std::vector<MeasurementSample> samples;
    DatasetSplit split;
};

struct DatasetOptions {
    int n_samples = 500;
    double sigma = 1e-3;
    double eta = 0.0;     // outlier penetration rate
    double k = 1.0;       // outlier noise amplification
    double load_lo = 0.9; // uniform per-bus load scaling range
    double load_hi = 1.1;
    std::uint64_t seed = 0;
    int max_retries = 10;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Generates scenarios per the simulation protocol: loads perturbed by
/// independent uniform factors, power flow solved, the complete measurement
/// set evaluated, Gaussian noise added, and a fraction eta of entries
/// corrupted with sigma amplified by k. Deterministic under the seed.
inline Dataset generate_dataset(const AdmittanceModel& model, const DatasetOptions& opt,
                                std::string case_id = {}) {
    if (opt.eta < 0.0 || opt.eta > 1.0) throw std::invalid_argument("generate_dataset: eta outside [0,1]");
    if (opt.k < 1.0) throw std::invalid_argument("generate_dataset: k below 1");
    if (opt.sigma <= 0.0) throw std::invalid_argument("generate_dataset: sigma must be positive");

    Dataset ds;
    ds.case_id = std::move(case_id);
    ds.seed = opt.seed;
    ds.sigma = opt.sigma;
    ds.eta = opt.eta;
    ds.k = opt.k;
    ds.samples.reserve(opt.n_samples);

    const int n = model.n_buses();
    const auto base_meta = full_measurement_set(model, opt.sigma);
    const int M = static_cast<int>(base_meta.size());
    const int n_outliers = static_cast<int>(std::llround(opt.eta * M));

    for (int si = 0; si < opt.n_samples; ++si) {
        std::mt19937_64 rng(detail::splitmix64(opt.seed ^ (0x5eed0000ULL + si)));
        std::uniform_real_distribution<double> unif(opt.load_lo, opt.load_hi);
        std::normal_distribution<double> gauss(0.0, 1.0);

        StateVector state;
        bool solved = false;
        for (int attempt = 0; attempt <= opt.max_retries && !solved; ++attempt) {
            VectorXd scale(n);
            for (int i = 0; i < n; ++i) scale[i] = unif(rng);
            try {
                state = solve_power_flow(model, make_pf_spec(model.grid, &scale));
                solved = true;
            } catch (const ConvergenceError&) {
                if (attempt == opt.max_retries) throw;
            }
        }

        MeasurementSample sample;
        sample.true_state = state;
        sample.meta = base_meta;
        sample.z_clean = eval_measurements(model, state, sample.meta);
        sample.z = sample.z_clean;

        // choose exactly round(eta*M) outlier positions via partial Fisher-Yates
        std::vector<int> order(M);
        for (int i = 0; i < M; ++i) order[i] = i;
        for (int i = 0; i < n_outliers; ++i) {
            std::uniform_int_distribution<int> pick(i, M - 1);
            std::swap(order[i], order[pick(rng)]);
            sample.meta[order[i]].is_outlier = true;
        }
        for (int m = 0; m < M; ++m) {
            double s = sample.meta[m].sigma;
            if (sample.meta[m].is_outlier) s *= opt.k;
            sample.z[m] += s * gauss(rng);
        }
        ds.samples.push_back(std::move(sample));
    }
    return ds;
}

/// Deterministic disjoint covering train/test split.
inline DatasetSplit make_split(int n_samples, double ratio, std::uint64_t seed) {
    if (ratio <= 0.0 || ratio >= 1.0) throw std::invalid_argument("make_split: ratio outside (0,1)");
    std::vector<int> order(n_samples);
    for (int i = 0; i < n_samples; ++i) order[i] = i;
    std::mt19937_64 rng(detail::splitmix64(seed ^ 0x511fULL));
    std::shuffle(order.begin(), order.end(), rng);
    int n_train = static_cast<int>(std::llround(ratio * n_samples));
    n_train = std::clamp(n_train, 0, n_samples);
    DatasetSplit split;
    split.train.assign(order.begin(), order.begin() + n_train);
    split.test.assign(order.begin() + n_train, order.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    split.degenerate = split.train.empty() || split.test.empty();
    return split;
}

inline Dataset split_dataset(Dataset ds, double ratio, std::uint64_t seed) {
    ds.split = make_split(static_cast<int>(ds.samples.size()), ratio, seed);
    return ds;
}

// ---------------------------------------------------------------------------
// JSON round trip. nlohmann serializes doubles with a shortest round-trip
// representation, so persisted datasets are lossless at full binary precision.

inline nlohmann::json to_json(const MeasurementMeta& m) {
    nlohmann::json j;
    j["kind"] = to_string(m.kind);
    if (m.other < 0)
        j["loc"] = {m.bus};
    else
        j["loc"] = {m.bus, m.other};
    j["sigma"] = m.sigma;
    j["outlier"] = m.is_outlier;
    return j;
}

inline nlohmann::json to_json(const Dataset& ds) {
    nlohmann::json j;
    j["case_id"] = ds.case_id;
    j["seed"] = ds.seed;
    j["sigma"] = ds.sigma;
    j["eta"] = ds.eta;
    j["k"] = ds.k;
    j["samples"] = nlohmann::json::array();
    for (const auto& s : ds.samples) {
        nlohmann::json js;
        js["V"] = std::vector<double>(s.true_state.V.begin(), s.true_state.V.end());
        js["theta"] = std::vector<double>(s.true_state.theta.begin(), s.true_state.theta.end());
        js["z"] = std::vector<double>(s.z.begin(), s.z.end());
        js["z_clean"] = std::vector<double>(s.z_clean.begin(), s.z_clean.end());
        js["meta"] = nlohmann::json::array();
        for (const auto& m : s.meta) js["meta"].push_back(to_json(m));
        j["samples"].push_back(std::move(js));
    }
    j["split"] = {{"train", ds.split.train}, {"test", ds.split.test}};
    return j;
}

inline Dataset dataset_from_json(const nlohmann::json& j, const AdmittanceModel* model = nullptr) {
    Dataset ds;
    ds.case_id = j.at("case_id").get<std::string>();
    ds.seed = j.at("seed").get<std::uint64_t>();
    ds.sigma = j.at("sigma").get<double>();
    ds.eta = j.at("eta").get<double>();
    ds.k = j.at("k").get<double>();
    for (const auto& js : j.at("samples")) {
        MeasurementSample s;
        auto vec = [](const nlohmann::json& a) {
            VectorXd v(a.size());
            for (size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
            return v;
        };
        s.true_state.V = vec(js.at("V"));
        s.true_state.theta = vec(js.at("theta"));
        s.z = vec(js.at("z"));
        s.z_clean = vec(js.at("z_clean"));
        for (const auto& jm : js.at("meta")) {
            MeasurementMeta m;
            m.kind = meas_kind_from_string(jm.at("kind").get<std::string>());
            const auto& loc = jm.at("loc");
            m.bus = loc.at(0).get<int>();
            m.other = loc.size() > 1 ? loc.at(1).get<int>() : -1;
            m.sigma = jm.at("sigma").get<double>();
            m.is_outlier = jm.at("outlier").get<bool>();
            s.meta.push_back(m);
        }
        ds.samples.push_back(std::move(s));
    }
    ds.split.train = j.at("split").at("train").get<std::vector<int>>();
    ds.split.test = j.at("split").at("test").get<std::vector<int>>();
    ds.split.degenerate = ds.split.train.empty() || ds.split.test.empty();

    if (model) {  // re-attach branch indices for flow measurements
        for (auto& s : ds.samples)
            for (auto& m : s.meta) {
                if (m.kind != MeasKind::pflow && m.kind != MeasKind::qflow) continue;
                for (int b = 0; b < model->grid.n_branches(); ++b) {
                    const auto& br = model->grid.branches[b];
                    if ((br.from == m.bus && br.to == m.other) ||
                        (br.to == m.bus && br.from == m.other)) {
                        m.branch = b;
                        break;
                    }
                }
                if (m.branch < 0)
                    throw std::invalid_argument("dataset references branch absent from grid");
            }
    }
    return ds;
}

}  // namespace gridse
