#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ctxrec/ingestion.hpp"
#include "ctxrec/strategies.hpp"

namespace ctxrec::cli {

// Exit-code contract shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitResourceLimit = 3;

// Comparison-table row label for a strategy spec.
std::string method_label(std::string_view strategy_spec);

struct IngestConfig {
    std::string log_path;
    std::string catalog_path;  // optional
    std::string output_path;
    // Empty = auto-register: temporal (when timestamps are present), every
    // ctx_* column, every catalog attribute.
    std::vector<std::string> dimensions;
    ingest::SessionizeOptions sessionize;
    std::int64_t tz_offset_seconds = 0;
};

struct EngineConfig {
    std::string algorithm = "cf";
    std::string cf_unit = "session";
    std::size_t cf_neighbors = 0;
    std::optional<double> min_support;
    std::optional<double> min_confidence;
    std::size_t max_itemsets = 1'000'000;
    int threads = 0;  // 0 = default_threads()

    strategy::EngineOptions resolve() const;
};

struct TrainConfig {
    std::string dataset_path;
    std::string model_path;
    std::vector<std::string> dimensions;  // DaVI config for the saved model
    EngineConfig engine;
};

struct EvaluateConfig {
    std::string dataset_path;
    std::string output_dir;
    std::string strategy = "baseline";
    std::vector<std::string> dimensions;  // candidate dims; empty = all registered
    std::vector<int> n_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int n_select = 1;
    double ratio = 0.8;
    double validation_fraction = 0.25;
    std::uint64_t seed = 0;
    std::size_t min_segment_sessions = 30;
    bool per_user = false;
    EngineConfig engine;
};

struct SweepConfig {
    std::string dataset_path;
    std::string output_dir;
    std::vector<std::string> dimensions;
    std::vector<int> n_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    double ratio = 0.8;
    std::uint64_t seed = 0;
    bool per_user = false;
    EngineConfig engine;
};

struct RecommendConfig {
    std::string model_path;
    std::vector<std::string> items;
    std::vector<std::string> context;  // dim=value tokens
    int n = 10;
};

struct CompareConfig {
    std::string dataset_path;
    std::string output_dir;
    std::vector<std::string> dimensions;
    std::vector<int> n_values = {1};
    int n_select = 1;
    double ratio = 0.8;
    double validation_fraction = 0.25;
    std::uint64_t seed = 0;
    std::size_t min_segment_sessions = 30;
    EngineConfig engine;  // algorithm field ignored; both run
};

int run_ingest(const IngestConfig& config, std::ostream& out, std::ostream& err);
int run_train(const TrainConfig& config, std::ostream& out, std::ostream& err);
int run_evaluate(const EvaluateConfig& config, std::ostream& out, std::ostream& err);
int run_sweep(const SweepConfig& config, std::ostream& out, std::ostream& err);
int run_recommend(const RecommendConfig& config, std::ostream& out, std::ostream& err);
int run_compare(const CompareConfig& config, std::ostream& out, std::ostream& err);

}  // namespace ctxrec::cli
