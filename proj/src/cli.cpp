#include "drpg/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "drpg/codec.hpp"
#include "drpg/config.hpp"
#include "drpg/error.hpp"
#include "drpg/flow.hpp"
#include "drpg/io.hpp"
#include "drpg/metrics.hpp"
#include "drpg/model.hpp"
#include "drpg/parallel.hpp"
#include "drpg/trainer.hpp"

namespace drpg {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string input;
    std::string format;
    std::optional<int> width;
    std::optional<int> height;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_input = true)
{
    cmd->add_option("--config", o.config, "JSON run configuration");
    cmd->add_option("--seed", o.seed, "RNG seed for initialization and shuffling");
    cmd->add_option("--threads", o.threads, "worker threads (1 = sequential reference path)")->check(CLI::PositiveNumber);
    cmd->add_option("--out-dir", o.out_dir, "output directory");
    if (with_input) {
        cmd->add_option("--input", o.input, "input sequence (.yuv or .y4m)");
        cmd->add_option("--format", o.format, "auto, yuv or y4m")->check(CLI::IsMember({"auto", "yuv", "y4m"}));
        cmd->add_option("--width", o.width, "frame width for raw .yuv input");
        cmd->add_option("--height", o.height, "frame height for raw .yuv input");
    }
}

RunConfig resolve_config(const CommonOptions& o)
{
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
    if (o.seed)
        cfg.apply_seed(*o.seed);
    if (o.threads)
        cfg.threads = *o.threads;
    if (!o.input.empty())
        cfg.input.path = o.input;
    if (!o.format.empty())
        cfg.input.format = o.format;
    if (o.width)
        cfg.input.width = o.width;
    if (o.height)
        cfg.input.height = o.height;
    if (!o.out_dir.empty())
        cfg.output_dir = o.out_dir;
    if (cfg.threads > 0)
        set_thread_count(cfg.threads);
    return cfg;
}

SequenceFormat parse_format(const std::string& f)
{
    if (f == "yuv")
        return SequenceFormat::Yuv420;
    if (f == "y4m")
        return SequenceFormat::Y4m;
    return SequenceFormat::Auto;
}

FrameSequence load_input(const InputSpec& in)
{
    if (in.path.empty())
        throw Error(ErrorKind::InvalidArgument, "no input sequence given (--input or input.path)");
    return read_sequence(in.path, parse_format(in.format), in.width, in.height);
}

fs::path output_path(const RunConfig& cfg, const std::string& explicit_path, const char* default_name)
{
    fs::path p = explicit_path.empty() ? fs::path(cfg.output_dir) / default_name : fs::path(explicit_path);
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    return p;
}

fs::path output_dir(const RunConfig& cfg, const std::string& explicit_dir, const char* default_name)
{
    fs::path p = explicit_dir.empty() ? fs::path(cfg.output_dir) / default_name : fs::path(explicit_dir);
    fs::create_directories(p);
    return p;
}

std::string frame_name(const char* prefix, std::size_t index, const char* ext)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%04zu%s", prefix, index, ext);
    return buf;
}

std::vector<RDPoint> curve_from_csv(const CsvTable& t, const std::string& scheme, const std::string& what)
{
    const std::size_t bits_col = t.column("bits_per_frame");
    const std::size_t psnr_col = t.column("psnr_db");
    std::optional<std::size_t> scheme_col;
    std::set<std::string> schemes;
    if (std::find(t.header.begin(), t.header.end(), "scheme") != t.header.end()) {
        scheme_col = t.column("scheme");
        for (const auto& row : t.rows)
            schemes.insert(row[*scheme_col]);
    }
    if (scheme.empty() && schemes.size() > 1)
        throw Error(ErrorKind::InvalidArgument, what + " CSV holds several schemes; select one");
    std::vector<RDPoint> pts;
    for (const auto& row : t.rows) {
        if (!scheme.empty() && scheme_col && row[*scheme_col] != scheme)
            continue;
        pts.push_back({parse_number(row[bits_col]), parse_number(row[psnr_col])});
    }
    if (pts.empty())
        throw Error(ErrorKind::InvalidArgument, what + " CSV has no rows for scheme '" + scheme + "'");
    return pts;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Deep reference picture generation toolkit: training-pair extraction, generator training, "
                 "inference, codec-proxy sweeps and quality metrics."};
    app.name("drpg");
    app.require_subcommand(1);

    // extract
    CommonOptions ex_common;
    std::string ex_output;
    std::optional<int> ex_block, ex_stride, ex_frames;
    bool ex_drop = false;
    auto* extract = app.add_subcommand("extract", "build (X, Y) training pairs from consecutive frames");
    add_common(extract, ex_common);
    extract->add_option("--output", ex_output, "dataset file (default <out-dir>/dataset.drpd)");
    extract->add_option("--block-size", ex_block, "block size");
    extract->add_option("--stride", ex_stride, "grid stride (default: block size)");
    extract->add_option("--frames", ex_frames, "use only the first N frames")->check(CLI::PositiveNumber);
    extract->add_flag("--drop-degenerate", ex_drop, "skip blocks without usable texture");

    // train
    CommonOptions tr_common;
    std::string tr_dataset, tr_output, tr_loss;
    std::optional<int> tr_epochs, tr_batch;
    std::optional<double> tr_lr;
    auto* train_cmd = app.add_subcommand("train", "train the generator on a dataset file");
    add_common(train_cmd, tr_common, false);
    train_cmd->add_option("--dataset", tr_dataset, "dataset file")->required();
    train_cmd->add_option("--output", tr_output, "weight file (default <out-dir>/weights.drpg)");
    train_cmd->add_option("--loss-csv", tr_loss, "loss log (default <out-dir>/loss.csv)");
    train_cmd->add_option("--epochs", tr_epochs, "epochs");
    train_cmd->add_option("--batch-size", tr_batch, "minibatch size");
    train_cmd->add_option("--lr", tr_lr, "initial learning-rate scale");

    // infer
    CommonOptions in_common;
    std::string in_weights, in_csv;
    auto* infer = app.add_subcommand("infer", "generate references from pristine previous frames");
    add_common(infer, in_common);
    infer->add_option("--weights", in_weights, "weight file")->required();
    infer->add_option("--csv", in_csv, "metrics CSV (default <out-dir>/infer/metrics.csv)");

    // dump-features
    CommonOptions df_common;
    std::string df_weights, df_layer = "block1";
    int df_frame = 0;
    auto* dump = app.add_subcommand("dump-features", "write hidden feature maps as PGM images");
    add_common(dump, df_common);
    dump->add_option("--weights", df_weights, "weight file")->required();
    dump->add_option("--layer", df_layer, "head1, head2, block1, block2 or block3");
    dump->add_option("--frame", df_frame, "frame index")->check(CLI::NonNegativeNumber);

    // encode
    CommonOptions en_common;
    std::string en_weights, en_mv_dir;
    int en_q = 16;
    auto* encode = app.add_subcommand("encode", "run the codec proxy at one quantizer step");
    add_common(encode, en_common);
    encode->add_option("--q", en_q, "quantizer step")->check(CLI::PositiveNumber);
    encode->add_option("--weights", en_weights, "substitute the generated reference");
    encode->add_option("--mv-dir", en_mv_dir, "write one motion-field CSV per inter frame");

    // sweep
    CommonOptions sw_common;
    std::string sw_weights, sw_output;
    std::vector<int> sw_q;
    auto* sweep = app.add_subcommand("sweep", "rate-distortion sweep with and without the generator");
    add_common(sweep, sw_common);
    sweep->add_option("--weights", sw_weights, "weight file")->required();
    sweep->add_option("--q", sw_q, "quantizer steps (default from config)")->delimiter(',');
    sweep->add_option("--output", sw_output, "RD CSV (default <out-dir>/rd.csv)");

    // bdrate
    std::string bd_rd, bd_anchor, bd_test, bd_anchor_scheme, bd_test_scheme;
    auto* bdrate = app.add_subcommand("bdrate", "BD-rate of a test RD curve against an anchor");
    bdrate->add_option("--rd", bd_rd, "sweep CSV; compares scheme 'net' against 'baseline'");
    bdrate->add_option("--anchor", bd_anchor, "anchor RD CSV");
    bdrate->add_option("--test", bd_test, "test RD CSV");
    bdrate->add_option("--anchor-scheme", bd_anchor_scheme, "scheme to read from the anchor CSV");
    bdrate->add_option("--test-scheme", bd_test_scheme, "scheme to read from the test CSV");

    // metrics
    CommonOptions me_common;
    std::string me_other, me_output;
    auto* metrics_cmd = app.add_subcommand("metrics", "per-frame PSNR/SSIM between two sequences");
    add_common(metrics_cmd, me_common);
    metrics_cmd->add_option("--reference", me_other, "second sequence (same geometry)")->required();
    metrics_cmd->add_option("--output", me_output, "CSV output (default: stdout)");

    // block-sweep
    CommonOptions bs_common;
    std::string bs_output;
    std::vector<int> bs_sizes{16, 24, 32, 40, 48};
    int bs_holdout = 2;
    std::optional<int> bs_epochs;
    auto* block_sweep_cmd = app.add_subcommand("block-sweep", "train one network per block size and compare PSNR");
    add_common(block_sweep_cmd, bs_common);
    block_sweep_cmd->add_option("--sizes", bs_sizes, "block sizes")->delimiter(',');
    block_sweep_cmd->add_option("--holdout", bs_holdout, "held-out trailing frames")->check(CLI::PositiveNumber);
    block_sweep_cmd->add_option("--epochs", bs_epochs, "epochs per network");
    block_sweep_cmd->add_option("--output", bs_output, "CSV output (default <out-dir>/block_sweep.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return 2;
    }

    try {
        if (*extract) {
            RunConfig cfg = resolve_config(ex_common);
            if (ex_block) {
                cfg.extraction.block_size = *ex_block;
                cfg.extraction.stride = *ex_block;
            }
            if (ex_stride)
                cfg.extraction.stride = *ex_stride;
            if (ex_drop)
                cfg.extraction.drop_degenerate = true;
            const FrameSequence seq = load_input(cfg.input);
            const std::size_t end = ex_frames ? static_cast<std::size_t>(*ex_frames) : seq.size();
            const auto pairs = extract_sequence_pairs(seq.frames, end, cfg.extraction);
            const fs::path path = output_path(cfg, ex_output, "dataset.drpd");
            write_dataset(pairs, cfg.extraction.block_size, path);
            out << "wrote " << pairs.size() << " pairs to " << path.string() << "\n";
        } else if (*train_cmd) {
            RunConfig cfg = resolve_config(tr_common);
            if (tr_epochs)
                cfg.train.epochs = *tr_epochs;
            if (tr_batch)
                cfg.train.batch_size = *tr_batch;
            if (tr_lr)
                cfg.train.lr0 = *tr_lr;
            const Dataset ds = read_dataset(tr_dataset);
            TrainResult res = train(build_network(cfg.model), ds.pairs, cfg.train, [&](const LossReport::Epoch& e) {
                out << "epoch " << e.epoch << " lr " << e.lr << " loss " << e.loss << "\n";
            });
            const fs::path wpath = output_path(cfg, tr_output, "weights.drpg");
            save_weights(res.net, wpath);
            const fs::path lpath = output_path(cfg, tr_loss, "loss.csv");
            write_csv(res.report.to_csv(), lpath);
            out << "wrote " << wpath.string() << " and " << lpath.string() << "\n";
        } else if (*infer) {
            RunConfig cfg = resolve_config(in_common);
            const FrameSequence seq = load_input(cfg.input);
            const GeneratorNet net = load_weights(in_weights);
            const fs::path dir = output_dir(cfg, "", "infer");
            CsvTable table;
            table.header = {"frame_index", "psnr_db", "ssim"};
            // Pristine frame t-1 in, frame t as ground truth.
            for (std::size_t t = 1; t < seq.size(); ++t) {
                const Plane gen = generate_reference(net, seq.frames[t - 1]);
                write_plane_pgm(gen, dir / frame_name("gen_", t, ".pgm"));
                table.rows.push_back({std::to_string(t), format_number(psnr(gen, seq.frames[t]), 4),
                                      format_number(ssim(gen, seq.frames[t]), 6)});
            }
            const fs::path csv = in_csv.empty() ? dir / "metrics.csv" : output_path(cfg, in_csv, "");
            write_csv(table, csv);
            out << "wrote " << table.rows.size() << " generated references to " << dir.string() << "\n";
        } else if (*dump) {
            RunConfig cfg = resolve_config(df_common);
            const FrameSequence seq = load_input(cfg.input);
            if (static_cast<std::size_t>(df_frame) >= seq.size())
                throw Error(ErrorKind::OutOfBounds, "frame index " + std::to_string(df_frame) + " beyond sequence of " +
                                                        std::to_string(seq.size()) + " frames");
            const GeneratorNet net = load_weights(df_weights);
            const auto maps = dump_feature_maps(net, seq.frames[static_cast<std::size_t>(df_frame)], df_layer);
            const fs::path dir = output_dir(cfg, "", "features");
            for (std::size_t c = 0; c < maps.size(); ++c)
                write_plane_pgm(maps[c], dir / frame_name((df_layer + "_ch").c_str(), c, ".pgm"));
            out << "wrote " << maps.size() << " feature maps to " << dir.string() << "\n";
        } else if (*encode) {
            RunConfig cfg = resolve_config(en_common);
            const FrameSequence seq = load_input(cfg.input);
            std::optional<GeneratorNet> net;
            if (!en_weights.empty())
                net = load_weights(en_weights);
            const SequenceEncoding enc = encode_sequence(seq.frames, net ? &*net : nullptr, cfg.sweep, en_q);
            if (!en_mv_dir.empty()) {
                fs::create_directories(en_mv_dir);
                for (std::size_t t = 1; t < enc.mv_fields.size(); ++t)
                    write_csv(mv_field_csv(enc.mv_fields[t]), fs::path(en_mv_dir) / frame_name("mv_", t, ".csv"));
            }
            out << "q " << en_q << " bits_per_frame " << format_number(enc.summary.bits, 2) << " psnr_db "
                << format_number(enc.summary.psnr, 4) << "\n";
        } else if (*sweep) {
            RunConfig cfg = resolve_config(sw_common);
            if (!sw_q.empty())
                cfg.q_set = sw_q;
            cfg.validate();
            const FrameSequence seq = load_input(cfg.input);
            const GeneratorNet net = load_weights(sw_weights);
            CsvTable table;
            table.header = {"scheme", "q", "bits_per_frame", "psnr_db"};
            const auto base = rd_sweep(seq.frames, nullptr, cfg.sweep, cfg.q_set);
            const auto with_net = rd_sweep(seq.frames, &net, cfg.sweep, cfg.q_set);
            for (auto [name, pts] : {std::pair{"baseline", &base}, std::pair{"net", &with_net}})
                for (std::size_t i = 0; i < pts->size(); ++i)
                    table.rows.push_back({name, std::to_string(cfg.q_set[i]), format_number((*pts)[i].bits, 4),
                                          format_number((*pts)[i].psnr, 6)});
            const fs::path path = output_path(cfg, sw_output, "rd.csv");
            write_csv(table, path);
            out << "wrote " << table.rows.size() << " RD points to " << path.string() << "\n";
        } else if (*bdrate) {
            std::vector<RDPoint> anchor, test;
            if (!bd_rd.empty()) {
                const CsvTable t = read_csv(bd_rd);
                anchor = curve_from_csv(t, bd_anchor_scheme.empty() ? "baseline" : bd_anchor_scheme, "anchor");
                test = curve_from_csv(t, bd_test_scheme.empty() ? "net" : bd_test_scheme, "test");
            } else if (!bd_anchor.empty() && !bd_test.empty()) {
                anchor = curve_from_csv(read_csv(bd_anchor), bd_anchor_scheme, "anchor");
                test = curve_from_csv(read_csv(bd_test), bd_test_scheme, "test");
            } else {
                throw Error(ErrorKind::InvalidArgument, "bdrate needs --rd or both --anchor and --test");
            }
            const double r = bd_rate(RDCurve(anchor), RDCurve(test));
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.4f", r == 0.0 ? 0.0 : r);
            out << buf << "\n";
        } else if (*metrics_cmd) {
            RunConfig cfg = resolve_config(me_common);
            const FrameSequence a = load_input(cfg.input);
            InputSpec other = cfg.input;
            other.path = me_other;
            const FrameSequence b = load_input(other);
            if (a.size() != b.size())
                throw Error(ErrorKind::ShapeMismatch, "sequences have " + std::to_string(a.size()) + " and " +
                                                          std::to_string(b.size()) + " frames");
            CsvTable table;
            table.header = {"frame_index", "psnr_db", "ssim"};
            for (std::size_t t = 0; t < a.size(); ++t)
                table.rows.push_back({std::to_string(t), format_number(psnr(a.frames[t], b.frames[t]), 4),
                                      format_number(ssim(a.frames[t], b.frames[t]), 6)});
            if (me_output.empty()) {
                out << "frame_index,psnr_db,ssim\n";
                for (const auto& r : table.rows)
                    out << r[0] << "," << r[1] << "," << r[2] << "\n";
            } else {
                write_csv(table, output_path(cfg, me_output, ""));
            }
        } else if (*block_sweep_cmd) {
            RunConfig cfg = resolve_config(bs_common);
            if (bs_epochs)
                cfg.train.epochs = *bs_epochs;
            const FrameSequence seq = load_input(cfg.input);
            BlockSweepConfig bcfg{cfg.extraction, cfg.model, cfg.train, bs_holdout};
            const auto rows = block_size_sweep(seq.frames, fs::path(cfg.input.path).stem().string(), bs_sizes, bcfg);
            const fs::path path = output_path(cfg, bs_output, "block_sweep.csv");
            write_csv(block_sweep_csv(rows), path);
            out << "wrote " << rows.size() << " rows to " << path.string() << "\n";
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace drpg
