#include <charconv>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ctxrec/commands.hpp"

namespace {

// "1..10" or a single value.
std::vector<int> parse_n_range(const std::string& text) {
    auto parse_int = [](std::string_view s) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
            throw CLI::ValidationError("--topn", "expected N or N..M with N >= 1");
        }
        return v;
    };
    const std::size_t dots = text.find("..");
    std::vector<int> values;
    if (dots == std::string::npos) {
        values.push_back(parse_int(text));
        return values;
    }
    const int lo = parse_int(std::string_view(text).substr(0, dots));
    const int hi = parse_int(std::string_view(text).substr(dots + 2));
    if (hi < lo) {
        throw CLI::ValidationError("--topn", "range upper bound below lower bound");
    }
    for (int n = lo; n <= hi; ++n) values.push_back(n);
    return values;
}

void add_engine_flags(CLI::App* cmd, ctxrec::cli::EngineConfig& engine, bool with_algorithm) {
    if (with_algorithm) {
        cmd->add_option("-a,--algorithm", engine.algorithm, "Recommender: cf or ar")
            ->check(CLI::IsMember({"cf", "ar"}));
    }
    cmd->add_option("--cf-unit", engine.cf_unit,
                    "Co-occurrence unit for CF: session or user")
        ->check(CLI::IsMember({"session", "user"}));
    cmd->add_option("--knn", engine.cf_neighbors,
                    "CF neighborhood size (0 = unlimited)");
    cmd->add_option("--min-support", engine.min_support,
                    "Override the AR minimum support heuristic");
    cmd->add_option("--min-confidence", engine.min_confidence,
                    "Override the AR minimum confidence heuristic");
    cmd->add_option("--itemset-cap", engine.max_itemsets,
                    "Abort AR mining beyond this many frequent itemsets");
    cmd->add_option("-t,--threads", engine.threads, "Worker threads (0 = all cores)")
        ->envname("CTXREC_THREADS");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ctxrec: context-aware top-N recommendation toolkit"};
    app.require_subcommand(1);

    ctxrec::cli::IngestConfig ingest;
    std::string sessionize_mode = "id";
    auto* cmd_ingest = app.add_subcommand("ingest", "Parse logs into a normalized dataset");
    cmd_ingest->add_option("--log", ingest.log_path, "Access log CSV")->required();
    cmd_ingest->add_option("--catalog", ingest.catalog_path, "Item catalog CSV (long format)");
    cmd_ingest->add_option("-o,--out", ingest.output_path, "Output dataset file")->required();
    cmd_ingest->add_option("-d,--dimensions", ingest.dimensions,
                           "Dimensions to register (default: auto-detect)")
        ->delimiter(',');
    cmd_ingest->add_option("--sessionize", sessionize_mode, "Grouping: id or timeout")
        ->check(CLI::IsMember({"id", "timeout"}));
    cmd_ingest->add_option("--gap", ingest.sessionize.gap_seconds,
                           "Timeout-mode session gap in seconds");
    cmd_ingest->add_option("--tz-offset", ingest.tz_offset_seconds,
                           "Seconds added to timestamps before temporal derivation");

    ctxrec::cli::TrainConfig train;
    auto* cmd_train = app.add_subcommand("train", "Train and save a recommendation model");
    cmd_train->add_option("--dataset", train.dataset_path, "Dataset file")->required();
    cmd_train->add_option("-o,--out", train.model_path, "Output model file")->required();
    cmd_train->add_option("-d,--dimensions", train.dimensions,
                          "Context dimensions injected as virtual items")
        ->delimiter(',');
    add_engine_flags(cmd_train, train.engine, true);

    ctxrec::cli::EvaluateConfig evaluate;
    std::string evaluate_topn = "1..10";
    auto* cmd_evaluate = app.add_subcommand("evaluate", "Run the All-But-One evaluation");
    cmd_evaluate->add_option("--dataset", evaluate.dataset_path, "Dataset file")->required();
    cmd_evaluate->add_option("-o,--out", evaluate.output_dir, "Report directory")->required();
    cmd_evaluate->add_option("-s,--strategy", evaluate.strategy,
                             "baseline | single:<dim> | best | forward | all | combined");
    cmd_evaluate->add_option("-d,--dimensions", evaluate.dimensions,
                             "Candidate dimensions (default: all registered)")
        ->delimiter(',');
    cmd_evaluate->add_option("-N,--topn", evaluate_topn, "N or N..M range");
    cmd_evaluate->add_option("--n-select", evaluate.n_select,
                             "N used by selection strategies");
    cmd_evaluate->add_option("--ratio", evaluate.ratio, "Training fraction");
    cmd_evaluate->add_option("--validation-fraction", evaluate.validation_fraction,
                             "Fraction of train carved out for selection");
    cmd_evaluate->add_option("--seed", evaluate.seed, "Split seed (mandatory)")->required();
    cmd_evaluate->add_option("--min-segment-sessions", evaluate.min_segment_sessions,
                             "Minimum sessions per Combined Reduction segment");
    cmd_evaluate->add_flag("--per-user", evaluate.per_user,
                           "Average per user instead of per session");
    add_engine_flags(cmd_evaluate, evaluate.engine, true);

    ctxrec::cli::SweepConfig sweep;
    std::string sweep_topn = "1..10";
    auto* cmd_sweep = app.add_subcommand("sweep", "Single-dimension sweep plus baseline");
    cmd_sweep->add_option("--dataset", sweep.dataset_path, "Dataset file")->required();
    cmd_sweep->add_option("-o,--out", sweep.output_dir, "Report directory")->required();
    cmd_sweep->add_option("-d,--dimensions", sweep.dimensions,
                          "Dimensions to sweep (default: all registered)")
        ->delimiter(',');
    cmd_sweep->add_option("-N,--topn", sweep_topn, "N or N..M range");
    cmd_sweep->add_option("--ratio", sweep.ratio, "Training fraction");
    cmd_sweep->add_option("--seed", sweep.seed, "Split seed (mandatory)")->required();
    cmd_sweep->add_flag("--per-user", sweep.per_user,
                        "Average per user instead of per session");
    add_engine_flags(cmd_sweep, sweep.engine, true);

    ctxrec::cli::RecommendConfig recommend;
    auto* cmd_recommend = app.add_subcommand("recommend", "Top-N for an active session");
    cmd_recommend->add_option("-m,--model", recommend.model_path, "Trained model file")
        ->required();
    cmd_recommend->add_option("-i,--items", recommend.items, "Observed items")
        ->delimiter(',')
        ->required();
    cmd_recommend->add_option("-c,--context", recommend.context,
                              "Active context as dim=value (repeatable)");
    cmd_recommend->add_option("-N,--topn", recommend.n, "List length")
        ->check(CLI::PositiveNumber);

    ctxrec::cli::CompareConfig compare;
    std::string compare_topn = "1";
    auto* cmd_compare = app.add_subcommand(
        "compare", "All strategies under both algorithms, one comparison table");
    cmd_compare->add_option("--dataset", compare.dataset_path, "Dataset file")->required();
    cmd_compare->add_option("-o,--out", compare.output_dir, "Report directory")->required();
    cmd_compare->add_option("-d,--dimensions", compare.dimensions,
                            "Candidate dimensions (default: all registered)")
        ->delimiter(',');
    cmd_compare->add_option("-N,--topn", compare_topn, "N or N..M range");
    cmd_compare->add_option("--n-select", compare.n_select, "N reported in the table");
    cmd_compare->add_option("--ratio", compare.ratio, "Training fraction");
    cmd_compare->add_option("--validation-fraction", compare.validation_fraction,
                            "Fraction of train carved out for selection");
    cmd_compare->add_option("--seed", compare.seed, "Split seed (mandatory)")->required();
    cmd_compare->add_option("--min-segment-sessions", compare.min_segment_sessions,
                            "Minimum sessions per Combined Reduction segment");
    add_engine_flags(cmd_compare, compare.engine, false);

    try {
        app.parse(argc, argv);
        if (*cmd_evaluate) evaluate.n_values = parse_n_range(evaluate_topn);
        if (*cmd_sweep) sweep.n_values = parse_n_range(sweep_topn);
        if (*cmd_compare) compare.n_values = parse_n_range(compare_topn);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ctxrec::cli::kExitInputError;
    }

    ingest.sessionize.mode = sessionize_mode == "timeout"
                                 ? ctxrec::ingest::SessionizeOptions::Mode::by_user_timeout
                                 : ctxrec::ingest::SessionizeOptions::Mode::by_session_id;

    try {
        if (*cmd_ingest) return ctxrec::cli::run_ingest(ingest, std::cout, std::cerr);
        if (*cmd_train) return ctxrec::cli::run_train(train, std::cout, std::cerr);
        if (*cmd_evaluate) return ctxrec::cli::run_evaluate(evaluate, std::cout, std::cerr);
        if (*cmd_sweep) return ctxrec::cli::run_sweep(sweep, std::cout, std::cerr);
        if (*cmd_recommend) return ctxrec::cli::run_recommend(recommend, std::cout, std::cerr);
        if (*cmd_compare) return ctxrec::cli::run_compare(compare, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ctxrec::cli::kExitInputError;
    }
    return ctxrec::cli::kExitInputError;
}
