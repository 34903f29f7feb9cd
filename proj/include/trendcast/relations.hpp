#pragma once

#include <map>
#include <string>
#include <vector>

#include "trendcast/series.hpp"
#include "trendcast/tensor.hpp"

namespace trendcast {

struct Vocab {
    std::vector<std::string> items;

    int index_of(const std::string& id) const {
        for (std::size_t i = 0; i < items.size(); ++i)
            if (items[i] == id) return static_cast<int>(i);
        return -1;
    }
    std::size_t require(const std::string& id, const char* what) const {
        const int i = index_of(id);
        if (i < 0) throw ConfigError(std::string("unknown ") + what + ": " + id);
        return static_cast<std::size_t>(i);
    }
    std::size_t size() const { return items.size(); }
};

/// Age-band embedding rows: a dedicated row 0 serves groups without an age
/// band, bands follow in declaration order.
inline std::size_t age_row(const std::optional<AgeBand>& band) {
    if (!band) return 0;
    return 1 + static_cast<std::size_t>(*band);
}
inline constexpr std::size_t kAgeRows = 5;

/// Trainable embedding tables; one row per vocabulary item, shared width.
struct EmbeddingTables {
    std::size_t dim = 10;
    Vocab cities;
    Vocab elements;
    Tensor city_emb;     // [n_cities x D]
    Tensor age_emb;      // [5 x D], row 0 = no age band
    Tensor gender_emb;   // [2 x D]
    Tensor element_emb;  // [n_elements x D]
    Tensor time_emb;     // [positions_per_year x D]
};

/// Child -> parent affiliation tree over fashion elements with per-edge
/// weights. Children are kept sorted for deterministic summation.
struct Taxonomy {
    std::map<std::string, std::vector<std::string>> children;
    std::map<std::string, std::map<std::string, double>> alpha;  // parent -> child -> weight

    static Taxonomy from_elements(const std::vector<FashionElement>& elements) {
        Taxonomy tax;
        for (const auto& e : elements) {
            e.validate();
            if (!e.parent_id) continue;
            bool parent_ok = false;
            for (const auto& p : elements)
                if (p.id == *e.parent_id) {
                    const bool valid_edge =
                        (e.kind == ElementKind::Attribute && p.kind == ElementKind::Category) ||
                        (e.kind == ElementKind::AttributeValue &&
                         p.kind == ElementKind::Attribute);
                    if (!valid_edge)
                        throw DataError("taxonomy edge " + e.id + " -> " + p.id +
                                        " violates the kind hierarchy");
                    parent_ok = true;
                    break;
                }
            if (!parent_ok) throw DataError("element " + e.id + " has unknown parent");
            tax.children[*e.parent_id].push_back(e.id);
        }
        for (auto& [parent, kids] : tax.children) std::sort(kids.begin(), kids.end());
        return tax;
    }

    const std::vector<std::string>* children_of(const std::string& id) const {
        auto it = children.find(id);
        return it == children.end() ? nullptr : &it->second;
    }

    double weight(const std::string& parent, const std::string& child) const {
        auto it = alpha.find(parent);
        if (it == alpha.end()) return 0.0;
        auto jt = it->second.find(child);
        return jt == it->second.end() ? 0.0 : jt->second;
    }

    void zero_weights() {
        for (auto& [parent, row] : alpha)
            for (auto& [child, w] : row) w = 0.0;
    }
};

/// Coarse -> fine group affiliation edges; the message weight is 1 on every
/// edge and 0 elsewhere.
struct GroupGraph {
    std::map<std::string, std::vector<std::string>> affiliates;  // coarse id -> fine ids
    double edge_weight = 1.0;

    static GroupGraph from_groups(const std::vector<UserGroup>& groups) {
        GroupGraph gg;
        for (const auto& coarse : groups) {
            if (coarse.is_fine()) continue;
            std::vector<std::string> fines;
            for (const auto& fine : groups)
                if (fine.is_fine() && fine.city == coarse.city &&
                    fine.gender == coarse.gender)
                    fines.push_back(fine.id);
            std::sort(fines.begin(), fines.end());
            if (!fines.empty()) gg.affiliates[coarse.id] = std::move(fines);
        }
        return gg;
    }

    const std::vector<std::string>* affiliates_of(const std::string& id) const {
        auto it = affiliates.find(id);
        return it == affiliates.end() ? nullptr : &it->second;
    }
};

/// Per-series step bound delimiting the training region (steps strictly
/// before the first held-out forecast target under a stride-1 split).
inline std::size_t series_train_bound(std::size_t length, std::size_t input_len,
                                      std::size_t horizon, std::size_t holdout_k) {
    const std::size_t need = input_len + horizon;
    if (length < need) return length;
    const std::size_t n_windows = length - need + 1;
    if (n_windows <= holdout_k) return length;
    return n_windows - holdout_k + input_len;
}

/// Edge weights from data: the mean over groups and training steps of each
/// child's share of the sibling total at that step, renormalized per parent.
/// Parents whose children carry no mass anywhere get a uniform row.
inline void build_alpha(Taxonomy& tax, const Dataset& ds, std::size_t input_len,
                        std::size_t horizon, std::size_t holdout_k) {
    tax.alpha.clear();
    for (const auto& [parent, kids] : tax.children) {
        std::map<std::string, double> acc;
        for (const auto& k : kids) acc[k] = 0.0;
        std::size_t n_steps = 0;
        for (const auto& g : ds.groups) {
            std::vector<const TrendSeries*> rows;
            rows.reserve(kids.size());
            bool complete = true;
            for (const auto& k : kids) {
                const TrendSeries* s = ds.find_series(g.id, k);
                if (!s) {
                    complete = false;
                    break;
                }
                rows.push_back(s);
            }
            if (!complete) continue;
            std::size_t bound = rows[0]->length();
            for (const auto* s : rows) bound = std::min(bound, s->length());
            bound = series_train_bound(bound, input_len, horizon, holdout_k);
            for (std::size_t t = 0; t < bound; ++t) {
                double total = 0.0;
                for (const auto* s : rows) total += s->values[t];
                if (total <= 0.0) continue;
                for (std::size_t i = 0; i < kids.size(); ++i)
                    acc[kids[i]] += rows[i]->values[t] / total;
                ++n_steps;
            }
        }
        std::map<std::string, double> row;
        if (n_steps == 0) {
            const double u = 1.0 / static_cast<double>(kids.size());
            for (const auto& k : kids) row[k] = u;
        } else {
            double total = 0.0;
            for (const auto& k : kids) total += acc[k];
            for (const auto& k : kids) row[k] = acc[k] / total;
        }
        tax.alpha[parent] = std::move(row);
    }
}

/// Replaces alpha rows from an override map {parent: {child: weight}};
/// each row is validated against the taxonomy and renormalized to sum 1.
inline void apply_alpha_override(
    Taxonomy& tax, const std::map<std::string, std::map<std::string, double>>& override_map) {
    for (const auto& [parent, row] : override_map) {
        const auto* kids = tax.children_of(parent);
        if (!kids) throw ConfigError("alpha override: " + parent + " has no children");
        double total = 0.0;
        for (const auto& k : *kids) {
            auto it = row.find(k);
            if (it == row.end())
                throw ConfigError("alpha override: missing child " + k + " of " + parent);
            if (it->second < 0.0)
                throw ConfigError("alpha override: negative weight for " + k);
            total += it->second;
        }
        if (total <= 0.0) throw ConfigError("alpha override: zero row for " + parent);
        for (const auto& k : *kids) tax.alpha[parent][k] = row.at(k) / total;
    }
}

// ---------------------------------------------------------------------------
// message passing on a tape
// ---------------------------------------------------------------------------

/// Embedding tables registered on one tape (or the raw tensors when the
/// forward is untracked).
struct TapeTables {
    Tensor city;
    Tensor age;
    Tensor gender;
    Tensor element;
    Tensor time;

    static TapeTables on_tape(Tape* tape, const EmbeddingTables& t) {
        TapeTables out;
        out.city = tape ? tape->leaf(t.city_emb) : t.city_emb;
        out.age = tape ? tape->leaf(t.age_emb) : t.age_emb;
        out.gender = tape ? tape->leaf(t.gender_emb) : t.gender_emb;
        out.element = tape ? tape->leaf(t.element_emb) : t.element_emb;
        out.time = tape ? tape->leaf(t.time_emb) : t.time_emb;
        return out;
    }
};

/// Fused group representation: a linear layer over the concatenated city,
/// age, and gender embeddings.
inline Tensor embed_group(Tape* tape, const TapeTables& tt, const EmbeddingTables& tables,
                          const UserGroup& g, const Tensor& fuse_w, const Tensor& fuse_b) {
    const std::size_t ci = tables.cities.require(g.city, "city");
    Tensor c = row(tape, tt.city, ci);
    Tensor a = row(tape, tt.age, age_row(g.age_band));
    Tensor n = row(tape, tt.gender, static_cast<std::size_t>(g.gender));
    return linear(tape, fuse_w, concat(tape, {c, a, n}), fuse_b);
}

/// Child -> parent message for one element, then fusion with the original
/// embedding. Leaves receive a zero message; the sum always uses original
/// (pre-update) child embeddings.
inline Tensor enhance_element(Tape* tape, const TapeTables& tt, const EmbeddingTables& tables,
                              const Taxonomy& tax, const std::string& element_id,
                              const Tensor& msg_w, const Tensor& msg_b) {
    Tensor f = row(tape, tt.element, tables.elements.require(element_id, "element"));
    Tensor message;
    const auto* kids = tax.children_of(element_id);
    if (kids && !kids->empty()) {
        std::vector<Tensor> child_rows;
        std::vector<double> weights;
        child_rows.reserve(kids->size());
        for (const auto& k : *kids) {
            child_rows.push_back(row(tape, tt.element, tables.elements.require(k, "element")));
            weights.push_back(tax.weight(element_id, k));
        }
        message = vecmat(tape, Tensor::vector(std::move(weights)),
                         stack_rows(tape, child_rows));
    } else {
        message = Tensor::zeros({tables.dim});
    }
    return linear(tape, msg_w, concat(tape, {f, message}), msg_b);
}

/// Affiliate -> coarse-group message, then fusion. Fine groups have no
/// affiliates and receive a zero message.
inline Tensor enhance_group(Tape* tape, const TapeTables& tt, const EmbeddingTables& tables,
                            const GroupGraph& graph, const std::vector<UserGroup>& groups,
                            const UserGroup& g, const Tensor& fuse_w, const Tensor& fuse_b,
                            const Tensor& msg_w, const Tensor& msg_b) {
    Tensor base = embed_group(tape, tt, tables, g, fuse_w, fuse_b);
    Tensor message;
    const auto* fines = graph.affiliates_of(g.id);
    if (fines && !fines->empty()) {
        std::vector<Tensor> fine_rows;
        std::vector<double> weights;
        fine_rows.reserve(fines->size());
        for (const auto& fid : *fines) {
            const UserGroup* fine = nullptr;
            for (const auto& cand : groups)
                if (cand.id == fid) {
                    fine = &cand;
                    break;
                }
            if (!fine) throw DataError("group graph references unknown group " + fid);
            fine_rows.push_back(embed_group(tape, tt, tables, *fine, fuse_w, fuse_b));
            weights.push_back(graph.edge_weight);
        }
        message = vecmat(tape, Tensor::vector(std::move(weights)),
                         stack_rows(tape, fine_rows));
    } else {
        message = Tensor::zeros({tables.dim});
    }
    return linear(tape, msg_w, concat(tape, {base, message}), msg_b);
}

}  // namespace trendcast
