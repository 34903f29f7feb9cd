#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trendcast/relations.hpp"
#include "trendcast/series.hpp"
#include "trendcast/tensor.hpp"

namespace trendcast {

/// Sliding attention geometry: windows of `window_len` encoder steps taken
/// every `stride` steps. Trailing steps that do not fill a window are not
/// attended.
struct AttentionConfig {
    std::size_t window_len = 24;
    std::size_t stride = 2;

    std::size_t window_count(std::size_t input_len) const {
        return (input_len - window_len) / stride + 1;
    }
    void validate(std::size_t input_len) const {
        if (window_len < 1 || window_len > input_len)
            throw ConfigError("attention window length must be in [1, input_len], got " +
                              std::to_string(window_len));
        if (stride < 1) throw ConfigError("attention stride must be >= 1");
    }
};

struct WindowSlice {
    std::size_t begin = 0;
    std::size_t len = 0;
};

inline std::vector<WindowSlice> sliding_subsequences(std::size_t input_len,
                                                     const AttentionConfig& cfg) {
    cfg.validate(input_len);
    std::vector<WindowSlice> out;
    for (std::size_t m = 0; m < cfg.window_count(input_len); ++m)
        out.push_back({m * cfg.stride, cfg.window_len});
    return out;
}

struct RearConfig {
    std::size_t emb_dim = 10;   // D
    std::size_t hidden = 50;    // H
    std::size_t input_len = 48; // T
    std::size_t horizon = 18;   // T'
    AttentionConfig attention;  // T_a, l
    bool use_attention = true;
    bool use_element_relations = true;
    bool use_group_relations = true;
    bool use_element_emb = true;
    bool use_group_emb = true;
    bool use_time_emb = true;
    std::size_t positions_per_year = 24;

    std::size_t attn_dim() const { return 2 * hidden; }

    void validate() const {
        if (emb_dim < 1 || hidden < 1) throw ConfigError("emb_dim and hidden must be >= 1");
        if (input_len < 1) throw ConfigError("input_len must be >= 1");
        if (horizon < 2) throw ConfigError("horizon must be > 1");
        if (positions_per_year < 1) throw ConfigError("positions_per_year must be >= 1");
        if (use_attention) attention.validate(input_len);
    }
};

/// Gate layout along the stacked dimension: input, forget, candidate, output.
struct LstmParams {
    Tensor w_input;   // [4H x in]
    Tensor w_hidden;  // [4H x H]
    Tensor bias;      // [4H]
};

/// One LSTM step: gates from the affine map of (x, h_prev), then
/// c = f.c_prev + i.g and h = o.tanh(c).
inline std::pair<Tensor, Tensor> lstm_cell(Tape* tape, const LstmParams& p, const Tensor& x,
                                           const Tensor& h_prev, const Tensor& c_prev) {
    const std::size_t H = p.w_hidden.shape[1];
    Tensor z = add(tape, linear(tape, p.w_input, x, p.bias), matvec(tape, p.w_hidden, h_prev));
    Tensor gi = sigmoid(tape, slice(tape, z, 0, H));
    Tensor gf = sigmoid(tape, slice(tape, z, H, H));
    Tensor gg = tanh_op(tape, slice(tape, z, 2 * H, H));
    Tensor go = sigmoid(tape, slice(tape, z, 3 * H, H));
    Tensor c = add(tape, mul(tape, gf, c_prev), mul(tape, gi, gg));
    Tensor h = mul(tape, go, tanh_op(tape, c));
    return {h, c};
}

/// Every trainable tensor of the model, addressable by name.
struct RearParams {
    EmbeddingTables tables;
    Tensor group_fuse_w, group_fuse_b;  // [D x 3D], [D]
    Tensor elem_msg_w, elem_msg_b;      // [D x 2D], [D]
    Tensor group_msg_w, group_msg_b;    // [D x 2D], [D]
    LstmParams encoder;                 // input 3D+1
    LstmParams dec_fwd, dec_bwd;        // input 3D
    Tensor attn_query_w;                // [A x 2H]
    Tensor attn_key_w;                  // [A x H]
    Tensor attn_bias, attn_score_v;     // [A], [A]
    Tensor attn_proj_w, attn_proj_b;    // [2H x H], [2H]
    Tensor fuse_query_w, fuse_key_w;    // [A x 2H], [A x 2H]
    Tensor fuse_bias, fuse_score_v;     // [A], [A]
    Tensor combine_w, combine_b;        // [2H x 4H], [2H]
    Tensor enc_head_w, enc_head_b;      // [1 x H], [1]
    Tensor dec_head_w, dec_head_b;      // [1 x 2H], [1]

    template <typename Fn>
    void for_each(Fn&& fn) {
        fn("city_emb", tables.city_emb);
        fn("age_emb", tables.age_emb);
        fn("gender_emb", tables.gender_emb);
        fn("element_emb", tables.element_emb);
        fn("time_emb", tables.time_emb);
        fn("group_fuse_w", group_fuse_w);
        fn("group_fuse_b", group_fuse_b);
        fn("elem_msg_w", elem_msg_w);
        fn("elem_msg_b", elem_msg_b);
        fn("group_msg_w", group_msg_w);
        fn("group_msg_b", group_msg_b);
        fn("encoder.w_input", encoder.w_input);
        fn("encoder.w_hidden", encoder.w_hidden);
        fn("encoder.bias", encoder.bias);
        fn("dec_fwd.w_input", dec_fwd.w_input);
        fn("dec_fwd.w_hidden", dec_fwd.w_hidden);
        fn("dec_fwd.bias", dec_fwd.bias);
        fn("dec_bwd.w_input", dec_bwd.w_input);
        fn("dec_bwd.w_hidden", dec_bwd.w_hidden);
        fn("dec_bwd.bias", dec_bwd.bias);
        fn("attn_query_w", attn_query_w);
        fn("attn_key_w", attn_key_w);
        fn("attn_bias", attn_bias);
        fn("attn_score_v", attn_score_v);
        fn("attn_proj_w", attn_proj_w);
        fn("attn_proj_b", attn_proj_b);
        fn("fuse_query_w", fuse_query_w);
        fn("fuse_key_w", fuse_key_w);
        fn("fuse_bias", fuse_bias);
        fn("fuse_score_v", fuse_score_v);
        fn("combine_w", combine_w);
        fn("combine_b", combine_b);
        fn("enc_head_w", enc_head_w);
        fn("enc_head_b", enc_head_b);
        fn("dec_head_w", dec_head_w);
        fn("dec_head_b", dec_head_b);
    }

    template <typename Fn>
    void for_each(Fn&& fn) const {
        const_cast<RearParams*>(this)->for_each(
            [&](const char* name, Tensor& t) { fn(name, static_cast<const Tensor&>(t)); });
    }
};

/// Per-decoder-step attention internals captured for analysis and tests.
struct AttentionTrace {
    // gamma[t][m] over window steps, phi[t] over windows, context[t][m] in R^H
    std::vector<std::vector<std::vector<double>>> gamma;
    std::vector<std::vector<double>> phi;
    std::vector<std::vector<std::vector<double>>> context;
    std::vector<std::vector<std::vector<double>>> window_states;  // [m][i] encoder h
};

struct ForwardResult {
    std::vector<double> encoder_preds;  // length T-1
    std::vector<double> decoder_preds;  // length T'
    double loss = 0.0;
    int loss_node = -1;
};

class RearModel {
public:
    RearModel() = default;

    RearModel(RearConfig cfg, const Dataset& ds, Taxonomy taxonomy, GroupGraph graph,
              NormStats stats, std::uint64_t seed)
        : cfg_(cfg), taxonomy_(std::move(taxonomy)), graph_(std::move(graph)),
          groups_(ds.groups), stats_(stats), seed_(seed) {
        cfg_.validate();
        if (!cfg_.use_element_relations) taxonomy_.zero_weights();
        if (!cfg_.use_group_relations) graph_.edge_weight = 0.0;
        params_.tables.dim = cfg_.emb_dim;
        for (const auto& g : ds.groups)
            if (params_.tables.cities.index_of(g.city) < 0)
                params_.tables.cities.items.push_back(g.city);
        for (const auto& e : ds.elements) params_.tables.elements.items.push_back(e.id);
        init_params();
    }

    const RearConfig& config() const { return cfg_; }
    RearParams& params() { return params_; }
    const RearParams& params() const { return params_; }
    const NormStats& norm_stats() const { return stats_; }
    const Taxonomy& taxonomy() const { return taxonomy_; }
    const GroupGraph& group_graph() const { return graph_; }
    const std::vector<UserGroup>& groups() const { return groups_; }
    std::uint64_t seed() const { return seed_; }

    /// Full forward pass for one sample whose values are already normalized.
    /// When `tape` is given the loss is recorded for backward; `tracked_out`
    /// receives the tape-registered parameter copies so the caller can read
    /// gradients per tensor.
    ForwardResult run(Tape* tape, const Sample& sample, bool with_loss = true,
                      RearParams* tracked_out = nullptr,
                      AttentionTrace* trace = nullptr) const {
        const std::size_t T = sample.input_len();
        const std::size_t Tp = sample.horizon();
        const std::size_t D = cfg_.emb_dim;
        const std::size_t H = cfg_.hidden;
        if (sample.history_positions.size() != T || sample.future_positions.size() != Tp)
            throw std::invalid_argument("sample positions do not match window lengths");
        if (Tp < 2) throw ConfigError("horizon must be > 1");
        if (cfg_.use_attention) cfg_.attention.validate(T);

        RearParams local;
        RearParams& P = tracked_out ? *tracked_out : local;
        P = params_;
        if (tape)
            P.for_each([&](const char*, Tensor& t) { t = tape->leaf(t); });
        TapeTables tt{P.tables.city_emb, P.tables.age_emb, P.tables.gender_emb,
                      P.tables.element_emb, P.tables.time_emb};

        const UserGroup* group = find_group(sample.group_id);
        if (!group) throw ConfigError("unknown group in sample: " + sample.group_id);

        // relation-enhanced sequence features
        Tensor g_slot = cfg_.use_group_emb
                            ? enhance_group(tape, tt, params_.tables, graph_, groups_, *group,
                                            P.group_fuse_w, P.group_fuse_b, P.group_msg_w,
                                            P.group_msg_b)
                            : Tensor::zeros({D});
        Tensor f_slot = cfg_.use_element_emb
                            ? enhance_element(tape, tt, params_.tables, taxonomy_,
                                              sample.element_id, P.elem_msg_w, P.elem_msg_b)
                            : Tensor::zeros({D});
        const Tensor zero_time = Tensor::zeros({D});

        auto time_slot = [&](std::size_t pos) -> Tensor {
            if (!cfg_.use_time_emb) return zero_time;
            if (pos >= cfg_.positions_per_year)
                throw ConfigError("year position out of range: " + std::to_string(pos));
            return row(tape, tt.time, pos);
        };

        // encoder over the history; input per step is [g*, f*, m_t, y_t]
        std::vector<Tensor> enc_states;
        enc_states.reserve(T);
        std::vector<Tensor> enc_preds;
        Tensor h = Tensor::zeros({H});
        Tensor c = Tensor::zeros({H});
        for (std::size_t t = 0; t < T; ++t) {
            Tensor vin = concat(tape, {g_slot, f_slot, time_slot(sample.history_positions[t]),
                                       Tensor::scalar(sample.history[t])});
            auto [hn, cn] = lstm_cell(tape, {P.encoder.w_input, P.encoder.w_hidden,
                                             P.encoder.bias}, vin, h, c);
            h = hn;
            c = cn;
            enc_states.push_back(h);
            if (with_loss && t + 1 < T)
                enc_preds.push_back(linear(tape, P.enc_head_w, h, P.enc_head_b));
        }

        // bidirectional decoder; only the forward direction is seeded with
        // the encoder's final state
        std::vector<Tensor> dec_inputs;
        dec_inputs.reserve(Tp);
        for (std::size_t t = 0; t < Tp; ++t)
            dec_inputs.push_back(
                concat(tape, {g_slot, f_slot, time_slot(sample.future_positions[t])}));

        std::vector<Tensor> fwd_states(Tp), bwd_states(Tp);
        {
            Tensor hd = h, cd = c;
            for (std::size_t t = 0; t < Tp; ++t) {
                auto [hn, cn] = lstm_cell(tape, {P.dec_fwd.w_input, P.dec_fwd.w_hidden,
                                                 P.dec_fwd.bias}, dec_inputs[t], hd, cd);
                hd = hn;
                cd = cn;
                fwd_states[t] = hd;
            }
        }
        {
            Tensor hd = Tensor::zeros({H}), cd = Tensor::zeros({H});
            for (std::size_t r = 0; r < Tp; ++r) {
                const std::size_t t = Tp - 1 - r;
                auto [hn, cn] = lstm_cell(tape, {P.dec_bwd.w_input, P.dec_bwd.w_hidden,
                                                 P.dec_bwd.bias}, dec_inputs[t], hd, cd);
                hd = hn;
                cd = cn;
                bwd_states[t] = hd;
            }
        }

        // sliding-window attention precomputation
        std::vector<Tensor> window_mats, window_keys;
        if (cfg_.use_attention) {
            for (const WindowSlice& w : sliding_subsequences(T, cfg_.attention)) {
                std::vector<Tensor> rows(enc_states.begin() + static_cast<std::ptrdiff_t>(w.begin),
                                         enc_states.begin() +
                                             static_cast<std::ptrdiff_t>(w.begin + w.len));
                Tensor S = stack_rows(tape, rows);
                window_mats.push_back(S);
                window_keys.push_back(linear_rows(tape, S, P.attn_key_w));
            }
            if (trace) {
                trace->window_states.clear();
                for (const Tensor& S : window_mats) {
                    std::vector<std::vector<double>> rows;
                    for (std::size_t i = 0; i < S.shape[0]; ++i)
                        rows.emplace_back(S.data.begin() + static_cast<std::ptrdiff_t>(i * S.shape[1]),
                                          S.data.begin() +
                                              static_cast<std::ptrdiff_t>((i + 1) * S.shape[1]));
                    trace->window_states.push_back(std::move(rows));
                }
                trace->gamma.assign(Tp, {});
                trace->phi.assign(Tp, {});
                trace->context.assign(Tp, {});
            }
        }

        std::vector<Tensor> dec_preds;
        dec_preds.reserve(Tp);
        for (std::size_t t = 0; t < Tp; ++t) {
            Tensor hd = concat(tape, {fwd_states[t], bwd_states[t]});
            Tensor h_star;
            if (cfg_.use_attention) {
                const std::size_t M = window_mats.size();
                Tensor query = add(tape, matvec(tape, P.attn_query_w, hd), P.attn_bias);
                std::vector<Tensor> attended;
                attended.reserve(M);
                for (std::size_t m = 0; m < M; ++m) {
                    Tensor scores = matvec(
                        tape, tanh_op(tape, add_rowvec(tape, window_keys[m], query)),
                        P.attn_score_v);
                    Tensor gamma = softmax(tape, scores);
                    Tensor context = vecmat(tape, gamma, window_mats[m]);
                    attended.push_back(
                        relu(tape, linear(tape, P.attn_proj_w, context, P.attn_proj_b)));
                    if (trace) {
                        trace->gamma[t].push_back(gamma.data);
                        trace->context[t].push_back(context.data);
                    }
                }
                Tensor D_mat = stack_rows(tape, attended);
                Tensor fuse_query = add(tape, matvec(tape, P.fuse_query_w, hd), P.fuse_bias);
                Tensor fuse_scores = matvec(
                    tape,
                    tanh_op(tape, add_rowvec(tape, linear_rows(tape, D_mat, P.fuse_key_w),
                                             fuse_query)),
                    P.fuse_score_v);
                Tensor phi = softmax(tape, fuse_scores);
                if (trace) trace->phi[t] = phi.data;
                Tensor x_t = vecmat(tape, phi, D_mat);
                h_star = linear(tape, P.combine_w, concat(tape, {hd, x_t}), P.combine_b);
            } else {
                h_star = hd;
            }
            dec_preds.push_back(linear(tape, P.dec_head_w, h_star, P.dec_head_b));
        }

        ForwardResult out;
        for (const Tensor& p : enc_preds) out.encoder_preds.push_back(p.value());
        for (const Tensor& p : dec_preds) out.decoder_preds.push_back(p.value());
        if (with_loss) {
            Tensor dec_vec = concat(tape, dec_preds);
            Tensor dec_target = Tensor::vector(sample.future);
            Tensor loss = l1_loss(tape, dec_vec, dec_target);
            if (T > 1) {
                Tensor enc_vec = concat(tape, enc_preds);
                Tensor enc_target = Tensor::vector(std::vector<double>(
                    sample.history.begin() + 1, sample.history.end()));
                loss = add(tape, l1_loss(tape, enc_vec, enc_target), loss);
            }
            out.loss = loss.value();
            out.loss_node = loss.node;
            if (!std::isfinite(out.loss))
                throw NumericError("non-finite loss for series " + sample.group_id + ":" +
                                   sample.element_id);
        }
        return out;
    }

    /// Convenience forecast: denormalized decoder outputs for one sample.
    std::vector<double> forecast_raw(const Sample& sample) const {
        ForwardResult r = run(nullptr, sample, false);
        std::vector<double> out;
        out.reserve(r.decoder_preds.size());
        for (double v : r.decoder_preds) out.push_back(stats_.denormalize(v));
        return out;
    }

    nlohmann::json to_json() const;
    static RearModel from_json(const nlohmann::json& j);

private:
    const UserGroup* find_group(const std::string& id) const {
        for (const auto& g : groups_)
            if (g.id == id) return &g;
        return nullptr;
    }

    void init_params() {
        Rng rng(seed_);
        const std::size_t D = cfg_.emb_dim;
        const std::size_t H = cfg_.hidden;
        const std::size_t A = cfg_.attn_dim();

        auto uniform_tensor = [&](std::vector<std::size_t> shape, std::size_t fan_in) {
            Tensor t = Tensor::zeros(std::move(shape));
            const double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (double& v : t.data) v = rng.uniform(-k, k);
            return t;
        };
        auto lstm = [&](std::size_t in) {
            LstmParams p;
            p.w_input = uniform_tensor({4 * H, in}, in);
            p.w_hidden = uniform_tensor({4 * H, H}, H);
            p.bias = uniform_tensor({4 * H}, in + H);
            // forget-gate bias starts at 1 to keep early gradients flowing
            for (std::size_t i = H; i < 2 * H; ++i) p.bias.data[i] = 1.0;
            return p;
        };

        auto& tb = params_.tables;
        tb.city_emb = uniform_tensor({std::max<std::size_t>(tb.cities.size(), 1), D}, D);
        tb.age_emb = uniform_tensor({kAgeRows, D}, D);
        tb.gender_emb = uniform_tensor({2, D}, D);
        tb.element_emb = uniform_tensor({std::max<std::size_t>(tb.elements.size(), 1), D}, D);
        tb.time_emb = uniform_tensor({cfg_.positions_per_year, D}, D);

        params_.group_fuse_w = uniform_tensor({D, 3 * D}, 3 * D);
        params_.group_fuse_b = uniform_tensor({D}, 3 * D);
        params_.elem_msg_w = uniform_tensor({D, 2 * D}, 2 * D);
        params_.elem_msg_b = uniform_tensor({D}, 2 * D);
        params_.group_msg_w = uniform_tensor({D, 2 * D}, 2 * D);
        params_.group_msg_b = uniform_tensor({D}, 2 * D);

        params_.encoder = lstm(3 * D + 1);
        params_.dec_fwd = lstm(3 * D);
        params_.dec_bwd = lstm(3 * D);

        params_.attn_query_w = uniform_tensor({A, 2 * H}, 2 * H);
        params_.attn_key_w = uniform_tensor({A, H}, H);
        params_.attn_bias = uniform_tensor({A}, A);
        params_.attn_score_v = uniform_tensor({A}, A);
        params_.attn_proj_w = uniform_tensor({2 * H, H}, H);
        params_.attn_proj_b = uniform_tensor({2 * H}, H);
        params_.fuse_query_w = uniform_tensor({A, 2 * H}, 2 * H);
        params_.fuse_key_w = uniform_tensor({A, 2 * H}, 2 * H);
        params_.fuse_bias = uniform_tensor({A}, A);
        params_.fuse_score_v = uniform_tensor({A}, A);
        params_.combine_w = uniform_tensor({2 * H, 4 * H}, 4 * H);
        params_.combine_b = uniform_tensor({2 * H}, 4 * H);
        params_.enc_head_w = uniform_tensor({1, H}, H);
        params_.enc_head_b = uniform_tensor({1}, H);
        params_.dec_head_w = uniform_tensor({1, 2 * H}, 2 * H);
        params_.dec_head_b = uniform_tensor({1}, 2 * H);
    }

    RearConfig cfg_;
    RearParams params_;
    Taxonomy taxonomy_;
    GroupGraph graph_;
    std::vector<UserGroup> groups_;
    NormStats stats_;
    std::uint64_t seed_ = 0;
};

// ---------------------------------------------------------------------------
// checkpoint serialization
// ---------------------------------------------------------------------------

inline nlohmann::json RearModel::to_json() const {
    nlohmann::json j;
    j["version"] = kVersion;
    j["seed"] = seed_;
    nlohmann::json cj;
    cj["emb_dim"] = cfg_.emb_dim;
    cj["hidden"] = cfg_.hidden;
    cj["input_len"] = cfg_.input_len;
    cj["horizon"] = cfg_.horizon;
    cj["attn_window"] = cfg_.attention.window_len;
    cj["attn_stride"] = cfg_.attention.stride;
    cj["use_attention"] = cfg_.use_attention;
    cj["use_element_relations"] = cfg_.use_element_relations;
    cj["use_group_relations"] = cfg_.use_group_relations;
    cj["use_element_emb"] = cfg_.use_element_emb;
    cj["use_group_emb"] = cfg_.use_group_emb;
    cj["use_time_emb"] = cfg_.use_time_emb;
    cj["positions_per_year"] = cfg_.positions_per_year;
    j["config"] = cj;
    j["norm"] = {{"min", stats_.min}, {"max", stats_.max}};
    j["vocab"] = {{"cities", params_.tables.cities.items},
                  {"elements", params_.tables.elements.items}};
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : groups_) {
        nlohmann::json gj;
        gj["id"] = g.id;
        gj["city"] = g.city;
        gj["gender"] = to_string(g.gender);
        gj["age_band"] = g.age_band ? nlohmann::json(to_string(*g.age_band)) : nlohmann::json();
        groups.push_back(std::move(gj));
    }
    j["groups"] = std::move(groups);
    j["taxonomy"] = {{"children", taxonomy_.children}, {"alpha", taxonomy_.alpha}};
    j["group_graph"] = {{"affiliates", graph_.affiliates}, {"edge_weight", graph_.edge_weight}};
    nlohmann::json params;
    params_.for_each([&](const char* name, const Tensor& t) {
        params[name] = {{"shape", t.shape}, {"data", t.data}};
    });
    j["params"] = std::move(params);
    return j;
}

inline RearModel RearModel::from_json(const nlohmann::json& j) {
    RearModel m;
    const auto& cj = j.at("config");
    m.cfg_.emb_dim = cj.at("emb_dim").get<std::size_t>();
    m.cfg_.hidden = cj.at("hidden").get<std::size_t>();
    m.cfg_.input_len = cj.at("input_len").get<std::size_t>();
    m.cfg_.horizon = cj.at("horizon").get<std::size_t>();
    m.cfg_.attention.window_len = cj.at("attn_window").get<std::size_t>();
    m.cfg_.attention.stride = cj.at("attn_stride").get<std::size_t>();
    m.cfg_.use_attention = cj.at("use_attention").get<bool>();
    m.cfg_.use_element_relations = cj.at("use_element_relations").get<bool>();
    m.cfg_.use_group_relations = cj.at("use_group_relations").get<bool>();
    m.cfg_.use_element_emb = cj.at("use_element_emb").get<bool>();
    m.cfg_.use_group_emb = cj.at("use_group_emb").get<bool>();
    m.cfg_.use_time_emb = cj.at("use_time_emb").get<bool>();
    m.cfg_.positions_per_year = cj.at("positions_per_year").get<std::size_t>();
    m.seed_ = j.at("seed").get<std::uint64_t>();
    m.stats_.min = j.at("norm").at("min").get<double>();
    m.stats_.max = j.at("norm").at("max").get<double>();
    m.params_.tables.dim = m.cfg_.emb_dim;
    m.params_.tables.cities.items = j.at("vocab").at("cities").get<std::vector<std::string>>();
    m.params_.tables.elements.items =
        j.at("vocab").at("elements").get<std::vector<std::string>>();
    for (const auto& gj : j.at("groups")) {
        UserGroup g;
        g.id = gj.at("id").get<std::string>();
        g.city = gj.at("city").get<std::string>();
        g.gender = gender_from_string(gj.at("gender").get<std::string>());
        if (!gj.at("age_band").is_null())
            g.age_band = age_band_from_string(gj.at("age_band").get<std::string>());
        m.groups_.push_back(std::move(g));
    }
    m.taxonomy_.children =
        j.at("taxonomy").at("children").get<std::map<std::string, std::vector<std::string>>>();
    m.taxonomy_.alpha = j.at("taxonomy")
                            .at("alpha")
                            .get<std::map<std::string, std::map<std::string, double>>>();
    m.graph_.affiliates =
        j.at("group_graph").at("affiliates").get<std::map<std::string, std::vector<std::string>>>();
    m.graph_.edge_weight = j.at("group_graph").at("edge_weight").get<double>();
    m.params_.for_each([&](const char* name, Tensor& t) {
        const auto& pj = j.at("params").at(name);
        t.shape = pj.at("shape").get<std::vector<std::size_t>>();
        t.data = pj.at("data").get<std::vector<double>>();
        if (Tensor::numel(t.shape) != t.data.size())
            throw DataError(std::string("checkpoint tensor ") + name + " is malformed");
    });
    return m;
}

/// Combined objective: next-step encoder loss plus decoder forecast loss,
/// both mean absolute error on the normalized scale.
inline double rear_loss(const std::vector<double>& enc_preds,
                        const std::vector<double>& enc_targets,
                        const std::vector<double>& dec_preds,
                        const std::vector<double>& dec_targets) {
    if (enc_preds.size() != enc_targets.size() || dec_preds.size() != dec_targets.size())
        throw std::invalid_argument("rear_loss: prediction/target length mismatch");
    auto mean_abs = [](const std::vector<double>& a, const std::vector<double>& b) {
        if (a.empty()) return 0.0;
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
        return acc / static_cast<double>(a.size());
    };
    return mean_abs(enc_preds, enc_targets) + mean_abs(dec_preds, dec_targets);
}

}  // namespace trendcast
