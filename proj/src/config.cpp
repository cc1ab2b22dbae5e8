#include "drpg/config.hpp"

#include <json.hpp>
#include <set>

#include "drpg/error.hpp"
#include "drpg/io.hpp"

namespace drpg {

using nlohmann::json;

void RunConfig::apply_seed(std::uint64_t s)
{
    seed = s;
    model.seed = s;
    train.shuffle_seed = s;
}

void RunConfig::validate() const
{
    extraction.validate();
    model.validate();
    train.validate();
    sweep.search.validate();
    if (sweep.reference_count < 1)
        throw Error(ErrorKind::InvalidArgument, "search.reference_count must be >= 1");
    if (q_set.size() != 4)
        throw Error(ErrorKind::InvalidArgument, "q_set must hold 4 quantizer steps (one cubic BD-rate fit), got " +
                                                    std::to_string(q_set.size()));
    for (std::size_t i = 0; i < q_set.size(); ++i) {
        if (q_set[i] < 1)
            throw Error(ErrorKind::InvalidArgument, "q_set entries must be >= 1");
        for (std::size_t j = 0; j < i; ++j)
            if (q_set[i] == q_set[j])
                throw Error(ErrorKind::InvalidArgument, "q_set holds " + std::to_string(q_set[i]) + " twice");
    }
}

namespace {

void reject_unknown(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed)
{
    if (!obj.is_object())
        throw Error(ErrorKind::Format, "config: '" + std::string(where) + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (auto a : allowed)
            known = known || it.key() == a;
        if (!known)
            throw Error(ErrorKind::Format, "config: unknown key '" + it.key() + "' in " + std::string(where));
    }
}

template <class T>
void read_opt(const json& obj, const char* key, T& out)
{
    if (obj.contains(key))
        out = obj.at(key).get<T>();
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Format, std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig cfg;
    try {
        reject_unknown(root, "top level",
                       {"input", "extraction", "model", "train", "search", "q_set", "output_dir", "seed", "threads"});
        if (root.contains("seed"))
            cfg.apply_seed(root.at("seed").get<std::uint64_t>());

        if (root.contains("input")) {
            const json& in = root.at("input");
            reject_unknown(in, "input", {"path", "format", "width", "height"});
            read_opt(in, "path", cfg.input.path);
            read_opt(in, "format", cfg.input.format);
            if (in.contains("width"))
                cfg.input.width = in.at("width").get<int>();
            if (in.contains("height"))
                cfg.input.height = in.at("height").get<int>();
        }
        if (root.contains("extraction")) {
            const json& ex = root.at("extraction");
            reject_unknown(ex, "extraction", {"block_size", "stride", "lk_iterations", "lk_eps", "mv_clamp",
                                              "mv_step", "degeneracy_threshold", "drop_degenerate"});
            auto& e = cfg.extraction;
            read_opt(ex, "block_size", e.block_size);
            e.stride = e.block_size;
            read_opt(ex, "stride", e.stride);
            read_opt(ex, "lk_iterations", e.lk_iterations);
            read_opt(ex, "lk_eps", e.lk_eps);
            read_opt(ex, "mv_clamp", e.mv_clamp);
            read_opt(ex, "mv_step", e.mv_step);
            read_opt(ex, "degeneracy_threshold", e.degeneracy_threshold);
            read_opt(ex, "drop_degenerate", e.drop_degenerate);
        }
        if (root.contains("model")) {
            const json& m = root.at("model");
            reject_unknown(m, "model", {"head_channels", "branch_reduce_channels", "branch_out_channels",
                                        "trunk_channels", "k"});
            auto& mc = cfg.model;
            read_opt(m, "head_channels", mc.head_channels);
            read_opt(m, "branch_reduce_channels", mc.branch_reduce_channels);
            read_opt(m, "branch_out_channels", mc.branch_out_channels);
            read_opt(m, "trunk_channels", mc.trunk_channels);
            if (m.contains("k")) {
                const json& k = m.at("k");
                if (k.is_number()) {
                    mc.k.fill(k.get<double>());
                } else {
                    auto ks = k.get<std::vector<double>>();
                    if (ks.size() != mc.k.size())
                        throw Error(ErrorKind::Format, "config: model.k must be a number or a list of 3 numbers");
                    std::copy(ks.begin(), ks.end(), mc.k.begin());
                }
            }
        }
        if (root.contains("train")) {
            const json& t = root.at("train");
            reject_unknown(t, "train",
                           {"lr0", "decay_interval_epochs", "decay_factor", "batch_size", "epochs", "rho", "eps"});
            auto& tc = cfg.train;
            read_opt(t, "lr0", tc.lr0);
            read_opt(t, "decay_interval_epochs", tc.decay_interval_epochs);
            read_opt(t, "decay_factor", tc.decay_factor);
            read_opt(t, "batch_size", tc.batch_size);
            read_opt(t, "epochs", tc.epochs);
            read_opt(t, "rho", tc.rho);
            read_opt(t, "eps", tc.eps);
        }
        if (root.contains("search")) {
            const json& s = root.at("search");
            reject_unknown(s, "search", {"search_range", "lambda_mv", "block_size", "reference_count"});
            read_opt(s, "search_range", cfg.sweep.search.search_range);
            read_opt(s, "lambda_mv", cfg.sweep.search.lambda_mv);
            read_opt(s, "block_size", cfg.sweep.search.block_size);
            read_opt(s, "reference_count", cfg.sweep.reference_count);
        }
        read_opt(root, "q_set", cfg.q_set);
        read_opt(root, "output_dir", cfg.output_dir);
        read_opt(root, "threads", cfg.threads);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Format, std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    return parse_run_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string dump_run_config(const RunConfig& cfg)
{
    json root;
    root["input"]["path"] = cfg.input.path;
    root["input"]["format"] = cfg.input.format;
    if (cfg.input.width)
        root["input"]["width"] = *cfg.input.width;
    if (cfg.input.height)
        root["input"]["height"] = *cfg.input.height;
    const auto& e = cfg.extraction;
    root["extraction"] = {{"block_size", e.block_size},
                          {"stride", e.stride},
                          {"lk_iterations", e.lk_iterations},
                          {"lk_eps", e.lk_eps},
                          {"mv_clamp", e.mv_clamp},
                          {"mv_step", e.mv_step},
                          {"degeneracy_threshold", e.degeneracy_threshold},
                          {"drop_degenerate", e.drop_degenerate}};
    const auto& m = cfg.model;
    root["model"] = {{"head_channels", m.head_channels},
                     {"branch_reduce_channels", m.branch_reduce_channels},
                     {"branch_out_channels", m.branch_out_channels},
                     {"trunk_channels", m.trunk_channels},
                     {"k", std::vector<double>(m.k.begin(), m.k.end())}};
    const auto& t = cfg.train;
    root["train"] = {{"lr0", t.lr0},       {"decay_interval_epochs", t.decay_interval_epochs},
                     {"decay_factor", t.decay_factor}, {"batch_size", t.batch_size},
                     {"epochs", t.epochs}, {"rho", t.rho},
                     {"eps", t.eps}};
    root["search"] = {{"search_range", cfg.sweep.search.search_range},
                      {"lambda_mv", cfg.sweep.search.lambda_mv},
                      {"block_size", cfg.sweep.search.block_size},
                      {"reference_count", cfg.sweep.reference_count}};
    root["q_set"] = cfg.q_set;
    root["output_dir"] = cfg.output_dir;
    root["seed"] = cfg.seed;
    root["threads"] = cfg.threads;
    return root.dump(2);
}

}  // namespace drpg
