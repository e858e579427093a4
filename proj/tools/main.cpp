#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "presets.hpp"
#include "stochsim/io.hpp"
#include "stochsim/learning.hpp"
#include "stochsim/processes.hpp"
#include "stochsim/spectral.hpp"

using namespace stochsim;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

learn::PredictiveModel as_predictive(const io::ModelFile &file) {
    if (file.is_classical()) return learn::ClassicalModel{file.classical(), std::nullopt};
    return learn::QuantumModel{file.quantum(), std::nullopt};
}

SymbolSequence sample_from(const io::ModelFile &file, long length, std::uint64_t seed) {
    if (file.is_classical()) {
        const auto s = hmm::summarize(file.classical());
        return hmm::sample_classical(file.classical(), s.pi, length, seed);
    }
    const auto &K = file.quantum();
    return qsim::sample_quantum(K, qsim::steady_coherent_state(K), length, seed);
}

double model_entropy(const io::ModelFile &file) {
    if (file.is_classical())
        return spectral::shannon_entropy(hmm::summarize(file.classical()).pi);
    return qsim::memory_entropy(file.quantum());
}

// Average Bhattacharyya of `approx` against `exact` over seeded pasts drawn
// from the exact model, predicting `horizon` further outcomes.
double predictive_bhattacharyya(const io::ModelFile &exact, const io::ModelFile &approx,
                                int n_pasts, int past_len, int horizon, std::uint64_t seed) {
    const auto exact_model = as_predictive(exact);
    const auto approx_model = as_predictive(approx);
    double acc = 0.0;
    for (int i = 0; i < n_pasts; ++i) {
        const auto past = sample_from(exact, past_len, seed + static_cast<std::uint64_t>(i));
        const RealVector p = learn::evaluate_predictive(exact_model, past, horizon);
        const RealVector q = learn::evaluate_predictive(approx_model, past, horizon);
        acc += learn::bhattacharyya(p, q);
    }
    return acc / n_pasts;
}

struct EvalArgs {
    std::string exact, approx, metric;
    int L = 10;
    int pasts = 1000;
    int past_len = 200;
    std::uint64_t seed = 0;
    std::string results;
};

int run_eval(const EvalArgs &a) {
    const io::ModelFile exact = io::load_model(a.exact);
    std::optional<io::ModelFile> approx;
    if (!a.approx.empty()) approx = io::load_model(a.approx);

    const auto need_pair = [&]() {
        if (!approx) throw UsageError("metric '" + a.metric + "' needs --approx");
    };
    const auto quantum_pair =
        [&]() -> std::pair<const qsim::QuantumTensor &, const qsim::QuantumTensor &> {
        need_pair();
        if (exact.is_classical() || approx->is_classical())
            throw UsageError("metric '" + a.metric + "' is defined for quantum models");
        return {exact.quantum(), approx->quantum()};
    };

    json params{{"metric", a.metric}, {"L", a.L}};
    double value = 0.0;
    if (a.metric == "entropy") {
        value = model_entropy(exact);
    } else if (a.metric == "divergence") {
        auto [A, B] = quantum_pair();
        value = qsim::divergence_density(A, B);
    } else if (a.metric == "fidelity") {
        auto [A, B] = quantum_pair();
        const Vector sa = qsim::steady_coherent_state(A);
        const Vector sb = qsim::optimal_compressed_initial_state(A, B, sa);
        value = qsim::fidelity(A, B, sa, sb, a.L);
    } else if (a.metric == "steady-fidelity") {
        auto [A, B] = quantum_pair();
        value = qsim::steady_fidelity(A, B, a.L);
    } else if (a.metric == "similarity") {
        need_pair();
        if (!exact.is_classical() || !approx->is_classical())
            throw UsageError("metric 'similarity' is defined for classical models");
        value = hmm::similarity_decay_rate(exact.classical(), approx->classical()).rate;
    } else if (a.metric == "bhattacharyya") {
        need_pair();
        value = predictive_bhattacharyya(exact, *approx, a.pasts, a.past_len, a.L, a.seed);
        params["pasts"] = a.pasts;
        params["past_len"] = a.past_len;
    } else {
        throw UsageError("unknown metric '" + a.metric + "'");
    }

    std::printf("%s %.12g\n", a.metric.c_str(), value);
    if (!a.results.empty()) {
        io::ResultsCsv csv(a.results);
        csv.row("eval", params, a.metric, value, a.seed);
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Classical and quantum simulators of stochastic processes: build, "
                 "compress, sample, compare, and fit"};
    app.require_subcommand(1);

    // ---- model build ------------------------------------------------------
    auto *model_cmd = app.add_subcommand("model", "Model construction");
    model_cmd->require_subcommand(1);
    auto *build = model_cmd->add_subcommand("build", "Build a preset process model");
    std::string build_process = "renewal", build_kind = "classical", build_out;
    int build_N = 2;
    build->add_option("--process", build_process, "Process family")
        ->check(CLI::IsMember({"renewal"}));
    build->add_option("--N", build_N, "Renewal period")->required();
    build->add_option("--kind", build_kind)->check(CLI::IsMember({"classical", "quantum"}));
    build->add_option("--out", build_out, "Output model file")->required();

    // ---- compress -----------------------------------------------------------
    auto *compress = app.add_subcommand("compress", "Reduce a model's memory dimension");
    std::string comp_in, comp_out, comp_method = "mps", comp_report;
    int comp_dim = 0;
    compress->add_option("--in", comp_in)->required();
    compress->add_option("--out", comp_out)->required();
    compress->add_option("--dim", comp_dim, "Compressed memory dimension")->required();
    compress->add_option("--method", comp_method)
        ->check(CLI::IsMember({"mps", "entropy", "spectral"}));
    compress->add_option("--report", comp_report, "Write a JSON report next to the model");

    // ---- sample / gap-hist ----------------------------------------------------
    auto *sample = app.add_subcommand("sample", "Draw outcome sequences from a model");
    std::string sample_in, sample_out;
    long sample_len = 0;
    int sample_count = 1;
    std::uint64_t sample_seed = 0;
    sample->add_option("--in", sample_in)->required();
    sample->add_option("--len", sample_len)->required();
    sample->add_option("--count", sample_count);
    sample->add_option("--seed", sample_seed);
    sample->add_option("--out", sample_out)->required();

    auto *gaphist = app.add_subcommand("gap-hist", "Histogram of 0-runs between 1s");
    std::string gap_in, gap_out;
    gaphist->add_option("--in", gap_in)->required();
    gaphist->add_option("--out", gap_out, "CSV output (stdout when missing)");

    // ---- eval ---------------------------------------------------------------
    auto *eval = app.add_subcommand("eval", "Accuracy metrics between two models");
    EvalArgs ea;
    eval->add_option("--exact", ea.exact)->required();
    eval->add_option("--approx", ea.approx);
    eval->add_option("--metric", ea.metric)
        ->required()
        ->check(CLI::IsMember({"fidelity", "divergence", "steady-fidelity", "bhattacharyya",
                               "similarity", "entropy"}));
    eval->add_option("--L", ea.L, "Horizon (fidelity length / prediction horizon)");
    eval->add_option("--pasts", ea.pasts, "Conditioning pasts for bhattacharyya");
    eval->add_option("--past-len", ea.past_len);
    eval->add_option("--seed", ea.seed);
    eval->add_option("--results", ea.results, "Append to a results CSV");

    // ---- train ------------------------------------------------------------
    auto *train = app.add_subcommand("train", "Fit a model to a training sequence");
    std::string train_data, train_kind = "quantum", train_update = "stiefel", train_out,
                train_trace;
    int train_dim = 2, train_restarts = 1, train_max_iters = 2000;
    double train_lr = 1e-2;
    std::uint64_t train_seed = 0;
    train->add_option("--data", train_data)->required();
    train->add_option("--kind", train_kind)->check(CLI::IsMember({"classical", "quantum"}));
    train->add_option("--dim", train_dim)->required();
    train->add_option("--restarts", train_restarts);
    train->add_option("--seed", train_seed);
    train->add_option("--update", train_update)->check(CLI::IsMember({"project", "stiefel"}));
    train->add_option("--max-iters", train_max_iters);
    train->add_option("--lr", train_lr, "Initial line-search step");
    train->add_option("--out", train_out)->required();
    train->add_option("--trace", train_trace, "Write the training trace JSON");

    // ---- ingest -----------------------------------------------------------
    auto *ingest = app.add_subcommand("ingest", "Map a categorical CSV column to symbols");
    std::string ingest_csv, ingest_column, ingest_out, ingest_map;
    ingest->add_option("--csv", ingest_csv)->required();
    ingest->add_option("--column", ingest_column)->required();
    ingest->add_option("--out", ingest_out)->required();
    ingest->add_option("--map", ingest_map, "Label map JSON (defaults to <out>.map.json)");

    // ---- experiment ---------------------------------------------------------
    auto *experiment = app.add_subcommand("experiment", "Preset experiment pipelines");
    presets::PresetOptions po;
    experiment->add_option("--preset", po.name)
        ->required()
        ->check(CLI::IsMember({"fig2", "fig3", "fig4", "fig5", "table1"}));
    std::string exp_scale = "desk";
    experiment->add_option("--scale", exp_scale)->check(CLI::IsMember({"desk", "paper"}));
    experiment->add_option("--seed", po.seed);
    experiment->add_option("--outdir", po.outdir)->required();
    std::string exp_csv, exp_column;
    experiment->add_option("--csv", exp_csv, "Input CSV for table1 (synthesized when absent)");
    experiment->add_option("--column", exp_column, "Column for table1 ingestion");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (build->parsed()) {
            io::ModelFile file;
            if (build_kind == "classical")
                file.model = processes::renewal_classical(build_N);
            else
                file.model = processes::renewal_quantum(build_N);
            file.metadata = {{"source", "renewal"}, {"N", build_N}};
            io::save_model(build_out, file);
        } else if (compress->parsed()) {
            const io::ModelFile in = io::load_model(comp_in);
            io::ModelFile out;
            json report{{"method", comp_method}, {"dim", comp_dim}};
            if (comp_method == "mps") {
                if (in.is_classical())
                    throw UsageError("method 'mps' compresses quantum models");
                report["entropy_before"] = qsim::memory_entropy(in.quantum());
                auto compressed = qsim::mps_compress(in.quantum(), comp_dim);
                report["entropy_after"] = qsim::memory_entropy(compressed);
                report["divergence"] = qsim::divergence_density(in.quantum(), compressed);
                out.model = std::move(compressed);
            } else {
                if (!in.is_classical())
                    throw UsageError("method '" + comp_method + "' compresses classical models");
                report["entropy_before"] =
                    spectral::shannon_entropy(hmm::summarize(in.classical()).pi);
                hmm::TransitionTensor compressed;
                if (comp_method == "entropy") {
                    auto c = hmm::compress_entropy_preserving(in.classical(), comp_dim);
                    compressed = std::move(c.tensor);
                    report["permutation"] = c.permutation;
                } else {
                    compressed = hmm::compress_spectral(in.classical(), comp_dim);
                }
                report["entropy_after"] = spectral::shannon_entropy(hmm::summarize(compressed).pi);
                report["similarity_rate"] =
                    hmm::similarity_decay_rate(in.classical(), compressed).rate;
                out.model = std::move(compressed);
            }
            out.metadata = {{"source", "compress"}, {"method", comp_method}, {"from", comp_in}};
            io::save_model(comp_out, out);
            std::cout << report.dump(2) << "\n";
            if (!comp_report.empty()) {
                std::ofstream rf(comp_report);
                if (!rf) throw IoError("cannot write report: " + comp_report);
                rf << report.dump(2) << "\n";
            }
        } else if (sample->parsed()) {
            const io::ModelFile in = io::load_model(sample_in);
            std::vector<SymbolSequence> seqs;
            for (int i = 0; i < sample_count; ++i)
                seqs.push_back(
                    sample_from(in, sample_len, sample_seed + static_cast<std::uint64_t>(i)));
            io::save_sequences(sample_out, seqs);
        } else if (gaphist->parsed()) {
            const auto seqs = io::load_sequences(gap_in, 2);
            std::map<long, long> hist;
            long total = 0;
            for (const auto &s : seqs)
                for (const auto &[g, c] : processes::gap_histogram(s)) {
                    hist[g] += c;
                    total += c;
                }
            std::ostringstream cs;
            cs << "gap,count,frequency\n";
            for (const auto &[g, c] : hist) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(c) / total);
                cs << g << ',' << c << ',' << buf << '\n';
            }
            if (gap_out.empty()) {
                std::cout << cs.str();
            } else {
                std::ofstream f(gap_out);
                if (!f) throw IoError("cannot write: " + gap_out);
                f << cs.str();
            }
        } else if (eval->parsed()) {
            return run_eval(ea);
        } else if (train->parsed()) {
            auto seqs = io::load_sequences(train_data);
            if (seqs.empty()) throw UsageError("training file holds no sequences");
            const SymbolSequence &seq = seqs.front();
            io::ModelFile out;
            json trace_json;
            if (train_kind == "quantum") {
                learn::TrainingConfig cfg;
                cfg.D = train_dim;
                cfg.restarts = train_restarts;
                cfg.seed = train_seed;
                cfg.max_iters = train_max_iters;
                cfg.learning_rate = train_lr;
                cfg.update_rule = train_update == "project" ? learn::UpdateRule::ProjectNormalize
                                                            : learn::UpdateRule::StiefelWenYin;
                auto trace = learn::train_quantum(seq, cfg);
                trace_json = {{"best_restart", trace.best_restart},
                              {"cost", trace.costs},
                              {"restart_final_cost", trace.restart_final_cost}};
                out.model = std::move(trace.final_tensor);
            } else {
                hmm::BaumWelchConfig cfg;
                cfg.max_iters = train_max_iters;
                double best = -std::numeric_limits<double>::infinity();
                hmm::BaumWelchResult bw;
                std::vector<double> finals;
                int best_r = 0;
                for (int r = 0; r < train_restarts; ++r) {
                    cfg.seed = train_seed + static_cast<std::uint64_t>(r);
                    auto cand = hmm::baum_welch(seq, train_dim, std::nullopt, cfg);
                    finals.push_back(cand.log_likelihood.back());
                    if (cand.log_likelihood.back() > best) {
                        best = cand.log_likelihood.back();
                        bw = std::move(cand);
                        best_r = r;
                    }
                }
                trace_json = {{"best_restart", best_r},
                              {"log_likelihood", bw.log_likelihood},
                              {"restart_final_log_likelihood", finals}};
                out.model = hmm::factorized_tensor(bw.J, bw.E);
            }
            out.metadata = {{"source", "train"},
                            {"kind", train_kind},
                            {"restarts", train_restarts},
                            {"seed", train_seed}};
            io::save_model(train_out, out);
            if (!train_trace.empty()) {
                trace_json["model"] = io::model_to_json(out);
                std::ofstream tf(train_trace);
                if (!tf) throw IoError("cannot write trace: " + train_trace);
                tf << trace_json.dump(2) << "\n";
            }
        } else if (ingest->parsed()) {
            const auto res = io::ingest_csv_column(ingest_csv, ingest_column);
            io::save_sequences(ingest_out, {res.sequence});
            io::save_label_map(ingest_map.empty() ? ingest_out + ".map.json" : ingest_map, res);
            std::cout << "symbols " << res.sequence.size() << " alphabet " << res.sequence.d
                      << "\n";
        } else if (experiment->parsed()) {
            po.scale = exp_scale;
            if (!exp_csv.empty()) po.csv = exp_csv;
            if (!exp_column.empty()) po.column = exp_column;
            presets::run_preset(po);
        }
    } catch (const UsageError &e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ArgumentError &e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError &e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error &e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
