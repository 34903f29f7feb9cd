#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "trendcast/series.hpp"

namespace trendcast {

/// Desk-scale synthetic dataset: seasonal leaf signals with configured
/// parent shares, parents as weighted child sums, coarse groups as mixtures
/// of their fine groups. Everything is a pure function of (config, seed).
struct SynthConfig {
    struct Child {
        std::string id;
        double share = 0.0;
    };
    struct Category {
        std::string id;
        std::vector<Child> children;
    };

    StepPeriod step_period = StepPeriod::HalfMonth;
    std::size_t num_steps = 120;
    std::vector<std::string> cities = {"metropolis"};
    std::vector<Gender> genders = {Gender::Female, Gender::Male};
    std::vector<AgeBand> age_bands = {AgeBand::A18_25, AgeBand::A25_40};
    std::vector<Category> categories;

    // family signal parameter ranges (drawn per category x fine group)
    double level_lo = 0.35, level_hi = 0.60;
    double trend_per_year_lo = -0.02, trend_per_year_hi = 0.02;
    double amplitude_lo = 0.05, amplitude_hi = 0.12;
    // per-leaf seasonal deviation from the family signal, as a fraction
    double child_variation = 0.0;

    double noise_leaf = 0.01;
    double noise_parent = 0.004;
    double noise_coarse = 0.004;

    void validate() const {
        if (num_steps < 2) throw ConfigError("synth: num_steps must be >= 2");
        if (cities.empty() || genders.empty()) throw ConfigError("synth: need cities and genders");
        if (categories.empty()) throw ConfigError("synth: need at least one category");
        for (const auto& cat : categories) {
            if (cat.children.empty())
                throw ConfigError("synth: category " + cat.id + " has no children");
            double total = 0.0;
            for (const auto& ch : cat.children) total += ch.share;
            if (std::fabs(total - 1.0) > 1e-9)
                throw ConfigError("synth: shares of " + cat.id + " sum to " +
                                  std::to_string(total) + ", expected 1");
        }
    }
};

/// 3 categories x 4 attributes x 6 groups (2 coarse + 4 fine), 120 steps.
inline SynthConfig default_synth_config() {
    SynthConfig cfg;
    const std::vector<std::string> cat_names = {"dress", "outerwear", "shoes"};
    const std::vector<std::string> child_names = {"a", "b", "c", "d"};
    const std::vector<double> shares = {0.4, 0.3, 0.2, 0.1};
    for (const auto& cn : cat_names) {
        SynthConfig::Category cat;
        cat.id = cn;
        for (std::size_t i = 0; i < child_names.size(); ++i)
            cat.children.push_back({cn + ":" + child_names[i], shares[i]});
        cfg.categories.push_back(std::move(cat));
    }
    return cfg;
}

inline std::string group_id_of(const std::string& city, Gender g,
                               const std::optional<AgeBand>& band) {
    std::string id = city + "_" + to_string(g);
    if (band) id += std::string("_") + to_string(*band);
    return id;
}

inline Dataset synth_generate(const SynthConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Dataset ds;
    ds.step_period = cfg.step_period;
    const std::size_t P = steps_per_year(cfg.step_period);
    const std::size_t n = cfg.num_steps;
    const double two_pi = 6.283185307179586477;

    for (const auto& cat : cfg.categories) {
        ds.elements.push_back({cat.id, ElementKind::Category, std::nullopt});
        for (const auto& ch : cat.children)
            ds.elements.push_back({ch.id, ElementKind::Attribute, cat.id});
    }

    // coarse groups first, then their fine groups, per city x gender
    struct FineRef {
        std::size_t group_index;
    };
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> coarse_to_fine;
    for (const auto& city : cfg.cities) {
        for (Gender g : cfg.genders) {
            UserGroup coarse{group_id_of(city, g, std::nullopt), city, g, std::nullopt};
            ds.groups.push_back(coarse);
            const std::size_t coarse_idx = ds.groups.size() - 1;
            std::vector<std::size_t> fines;
            for (AgeBand band : cfg.age_bands) {
                ds.groups.push_back({group_id_of(city, g, band), city, g, band});
                fines.push_back(ds.groups.size() - 1);
            }
            coarse_to_fine.emplace_back(coarse_idx, std::move(fines));
        }
    }

    Rng rng(seed);

    // clean[group_index][element_id] -> series values before noise
    std::vector<std::map<std::string, std::vector<double>>> clean(ds.groups.size());

    for (const auto& [coarse_idx, fine_idxs] : coarse_to_fine) {
        for (const auto& cat : cfg.categories) {
            for (std::size_t fi : fine_idxs) {
                const double level = rng.uniform(cfg.level_lo, cfg.level_hi);
                const double trend =
                    rng.uniform(cfg.trend_per_year_lo, cfg.trend_per_year_hi) /
                    static_cast<double>(P);
                const double amp = rng.uniform(cfg.amplitude_lo, cfg.amplitude_hi);
                const double phase = rng.uniform(0.0, two_pi);

                std::vector<double> family(n);
                for (std::size_t t = 0; t < n; ++t) {
                    const double pos = static_cast<double>(t % P);
                    family[t] = level + trend * static_cast<double>(t) +
                                amp * std::sin(two_pi * pos / static_cast<double>(P) + phase);
                }

                std::vector<double> parent(n, 0.0);
                for (const auto& ch : cat.children) {
                    const double child_phase = rng.uniform(0.0, two_pi);
                    std::vector<double> leaf(n);
                    for (std::size_t t = 0; t < n; ++t) {
                        const double pos = static_cast<double>(t % P);
                        const double wiggle =
                            cfg.child_variation *
                            std::sin(two_pi * pos / static_cast<double>(P) + child_phase);
                        leaf[t] = ch.share * family[t] * (1.0 + wiggle);
                    }
                    for (std::size_t t = 0; t < n; ++t) parent[t] += ch.share * leaf[t];
                    clean[fi][ch.id] = std::move(leaf);
                }
                clean[fi][cat.id] = std::move(parent);
            }
            // coarse group: uniform mixture of its fine groups, element-wise
            const double w = 1.0 / static_cast<double>(fine_idxs.size());
            auto mix = [&](const std::string& element_id) {
                std::vector<double> acc(n, 0.0);
                for (std::size_t fi : fine_idxs) {
                    const auto& src = clean[fi].at(element_id);
                    for (std::size_t t = 0; t < n; ++t) acc[t] += w * src[t];
                }
                clean[coarse_idx][element_id] = std::move(acc);
            };
            mix(cat.id);
            for (const auto& ch : cat.children) mix(ch.id);
        }
    }

    // emit series in (group, element) order with per-series noise
    for (std::size_t gi = 0; gi < ds.groups.size(); ++gi) {
        const bool coarse = !ds.groups[gi].is_fine();
        for (const auto& el : ds.elements) {
            const bool parent_el = el.kind == ElementKind::Category;
            const double sigma =
                parent_el ? cfg.noise_parent : (coarse ? cfg.noise_coarse : cfg.noise_leaf);
            TrendSeries s;
            s.group_id = ds.groups[gi].id;
            s.element_id = el.id;
            s.values = clean[gi].at(el.id);
            if (sigma > 0.0)
                for (double& v : s.values) v += rng.normal(0.0, sigma);
            for (double& v : s.values) v = std::clamp(v, 0.0, 1.0);
            s.valid.assign(n, true);
            ds.series.push_back(std::move(s));
        }
    }
    return ds;
}

}  // namespace trendcast
