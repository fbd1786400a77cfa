#include "ctxrec/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ctxrec/dataset_io.hpp"
#include "ctxrec/parallel.hpp"

namespace ctxrec::cli {

namespace {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_cell(double v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out.push_back(sep);
        out += parts[i];
    }
    return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

// One JSON-lines record per (method, dims, N) plus a header record carrying
// the seed and the split digest.
void write_reports(const std::filesystem::path& dir, const json& header,
                   const std::vector<json>& records, std::ostream& out) {
    std::filesystem::create_directories(dir);
    auto jsonl = open_output(dir / "report.jsonl");
    jsonl << header.dump() << "\n";
    for (const json& record : records) {
        jsonl << record.dump() << "\n";
    }

    auto csv = open_output(dir / "report.csv");
    csv << "method,algorithm,dims,N,recall,precision,f1,cases,skipped\n";
    for (const json& record : records) {
        if (record.at("type") != "result") continue;
        csv << record.at("method").get<std::string>() << ','
            << record.at("algorithm").get<std::string>() << ','
            << join(record.at("dims").get<std::vector<std::string>>(), '+') << ','
            << record.at("N").get<int>() << ','
            << format_double(record.at("recall").get<double>()) << ','
            << format_double(record.at("precision").get<double>()) << ','
            << format_double(record.at("f1").get<double>()) << ','
            << record.at("cases").get<std::size_t>() << ','
            << record.at("skipped").get<std::size_t>() << "\n";
    }
    out << "wrote " << (dir / "report.jsonl").string() << " and "
        << (dir / "report.csv").string() << "\n";
}

std::vector<json> report_records(const std::string& method, const std::string& algorithm,
                                 const std::vector<std::string>& dims,
                                 const eval::EvalReport& report) {
    std::vector<json> records;
    records.reserve(report.rows.size());
    for (const eval::EvalRow& row : report.rows) {
        json record;
        record["type"] = "result";
        record["method"] = method;
        record["algorithm"] = algorithm;
        record["dims"] = dims;
        record["N"] = row.n;
        record["recall"] = row.recall;
        record["precision"] = row.precision;
        record["f1"] = row.f1;
        record["cases"] = report.cases;
        record["skipped"] = report.skipped;
        records.push_back(std::move(record));
    }
    return records;
}

int exit_code_for(const Error& e) {
    return dynamic_cast<const ResourceLimitError*>(&e) != nullptr ? kExitResourceLimit
                                                                  : kExitInputError;
}

}  // namespace

std::string method_label(std::string_view strategy_spec) {
    if (strategy_spec == "baseline") return "user_x_item";
    if (strategy_spec == "best") return "davi_best_context";
    if (strategy_spec == "forward") return "davi_forward_selection";
    if (strategy_spec == "all") return "davi_all_together";
    if (strategy_spec == "combined") return "combined_reduction";
    if (strategy_spec.rfind("single:", 0) == 0) {
        return "davi_" + std::string(strategy_spec.substr(7));
    }
    return std::string(strategy_spec);
}

strategy::EngineOptions EngineConfig::resolve() const {
    strategy::EngineOptions options;
    options.algorithm = strategy::algorithm_from_string(algorithm);
    if (cf_unit == "session") {
        options.cf_unit = cf::BuildOptions::Unit::session;
    } else if (cf_unit == "user") {
        options.cf_unit = cf::BuildOptions::Unit::user;
    } else {
        throw ValidationError("unknown co-occurrence unit '" + cf_unit +
                              "' (expected session or user)");
    }
    options.cf_neighbors = cf_neighbors;
    options.min_support = min_support;
    options.min_confidence = min_confidence;
    options.max_itemsets = max_itemsets;
    options.threads = threads > 0 ? threads : default_threads();
    return options;
}

int run_ingest(const IngestConfig& config, std::ostream& out, std::ostream& err) {
    try {
        std::ifstream log(config.log_path);
        if (!log) {
            throw ParseError("cannot open access log '" + config.log_path + "'");
        }
        ingest::ParseResult parsed = ingest::parse_access_log(log);
        for (const std::string& warning : parsed.warnings) {
            err << "warning: " << warning << "\n";
        }
        for (const ingest::RowError& error : parsed.row_errors) {
            err << "warning: " << config.log_path << ":" << error.line << ": "
                << error.message << " (row skipped)\n";
        }
        if (!parsed.row_errors.empty()) {
            err << "warning: skipped " << parsed.row_errors.size() << " bad row(s)\n";
        }
        if (parsed.accesses.empty()) {
            throw ParseError("access log contains no usable rows");
        }

        ItemCatalog catalog;
        if (!config.catalog_path.empty()) {
            std::ifstream cat(config.catalog_path);
            if (!cat) {
                throw ParseError("cannot open item catalog '" + config.catalog_path + "'");
            }
            ingest::CatalogResult loaded = ingest::load_item_catalog(cat);
            for (const std::string& warning : loaded.warnings) {
                err << "warning: " << warning << "\n";
            }
            catalog = std::move(loaded.catalog);
        }

        const bool timestamps_everywhere =
            std::all_of(parsed.accesses.begin(), parsed.accesses.end(),
                        [](const Access& a) { return a.timestamp.has_value(); });

        std::set<std::string> session_attrs;
        for (const Access& a : parsed.accesses) {
            for (const auto& [name, value] : a.raw_context) session_attrs.insert(name);
        }
        std::set<std::string> catalog_attrs;
        for (const auto& [item, attrs] : catalog) {
            for (const auto& [name, value] : attrs) catalog_attrs.insert(name);
        }

        DimensionRegistry registry;
        if (config.dimensions.empty()) {
            if (timestamps_everywhere) {
                for (std::string_view name : ingest::kTemporalDimensions) {
                    registry.add({std::string(name), DimensionSource::temporal, {}});
                }
            } else if (std::any_of(parsed.accesses.begin(), parsed.accesses.end(),
                                   [](const Access& a) { return a.timestamp.has_value(); })) {
                err << "warning: some accesses lack timestamps; "
                       "temporal dimensions not registered\n";
            }
            for (const std::string& name : session_attrs) {
                registry.add({name, DimensionSource::session_attribute, {}});
            }
            for (const std::string& name : catalog_attrs) {
                if (!registry.contains(name)) {
                    registry.add({name, DimensionSource::item_attribute, {}});
                }
            }
        } else {
            for (const std::string& name : config.dimensions) {
                if (ingest::is_temporal_dimension(name)) {
                    registry.add({name, DimensionSource::temporal, {}});
                } else if (session_attrs.count(name) != 0) {
                    registry.add({name, DimensionSource::session_attribute, {}});
                } else if (catalog_attrs.count(name) != 0) {
                    registry.add({name, DimensionSource::item_attribute, {}});
                } else {
                    throw RegistryError(
                        "dimension '" + name +
                        "' is neither temporal, a ctx_* column, nor a catalog attribute");
                }
            }
        }

        std::vector<Access> accesses =
            ingest::assign_session_ids(std::move(parsed.accesses), config.sessionize);
        ingest::apply_temporal_contexts(accesses, registry, config.tz_offset_seconds);

        BuildReport build_report;
        Dataset dataset = build_dataset(accesses, std::move(catalog), std::move(registry),
                                        &build_report);
        for (const std::string& warning : build_report.warnings) {
            err << "warning: " << warning << "\n";
        }

        io::save_dataset_file(dataset, config.output_path);

        out << "dataset: " << config.output_path << "\n";
        out << "sessions: " << dataset.sessions.size() << "\n";
        out << "accesses: " << dataset.stats.accesses << "\n";
        out << "distinct items: " << dataset.stats.distinct_items << "\n";
        out << "distinct users: " << dataset.stats.distinct_users << "\n";
        std::vector<std::string> names;
        for (const ContextDimension& dim : dataset.dimensions.all()) names.push_back(dim.name);
        out << "dimensions: " << join(names, ',') << "\n";
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int run_train(const TrainConfig& config, std::ostream& out, std::ostream& err) {
    try {
        const Dataset dataset = io::load_dataset_file(config.dataset_path);
        davi::DaviConfig davi_config{config.dimensions};
        davi::validate_config(davi_config, dataset.dimensions);
        const strategy::EngineOptions engine = config.engine.resolve();

        auto augmented = davi::augment_dataset(dataset, davi_config);
        auto model_out = open_output(config.model_path);
        if (engine.algorithm == strategy::Algorithm::cf) {
            cf::BuildOptions build{engine.cf_unit, engine.threads};
            const cf::SimilarityModel model = cf::SimilarityModel::build(augmented, build);
            model.save(model_out);
            out << "cf model: " << model.token_count() << " tokens, " << model.pair_count()
                << " similarity pairs -> " << config.model_path << "\n";
        } else {
            ar::Thresholds thresholds;
            if (engine.min_support && engine.min_confidence) {
                thresholds = {*engine.min_support, *engine.min_confidence};
            } else {
                thresholds = ar::choose_thresholds(augmented);
                if (engine.min_support) thresholds.min_support = *engine.min_support;
                if (engine.min_confidence) thresholds.min_confidence = *engine.min_confidence;
            }
            ar::MineOptions mine{engine.max_itemsets, engine.threads};
            const auto itemsets =
                ar::mine_frequent_itemsets(augmented, thresholds.min_support, mine);
            const ar::RuleModel model =
                ar::generate_rules(itemsets, thresholds.min_confidence, thresholds.min_support);
            model.save(model_out);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.4g, min_confidence %.4g",
                          thresholds.min_support, thresholds.min_confidence);
            out << "ar model: " << model.rules.size() << " rules (min_support " << buf
                << ") -> " << config.model_path << "\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

namespace {

json evaluate_header(const EvaluateConfig& config, const strategy::StrategyResult& result) {
    json header;
    header["type"] = "header";
    header["command"] = "evaluate";
    header["algorithm"] = config.engine.algorithm;
    header["strategy"] = config.strategy;
    header["method"] = method_label(config.strategy);
    header["dims"] = result.chosen_dims;
    header["seed"] = config.seed;
    header["ratio"] = config.ratio;
    header["n_values"] = config.n_values;
    header["n_select"] = config.n_select;
    header["split_digest"] = result.split_digest;
    header["cases"] = result.report.cases;
    header["skipped"] = result.report.skipped;
    if (!result.segments.empty()) {
        json segments = json::array();
        for (const strategy::SegmentInfo& s : result.segments) {
            json seg;
            seg["dimension"] = s.dimension;
            seg["value"] = s.value;
            seg["train_sessions"] = s.train_sessions;
            if (s.validation_f1) seg["validation_f1"] = *s.validation_f1;
            seg["retained"] = s.retained;
            if (!s.note.empty()) seg["note"] = s.note;
            segments.push_back(std::move(seg));
        }
        header["segments"] = std::move(segments);
    }
    return header;
}

}  // namespace

int run_evaluate(const EvaluateConfig& config, std::ostream& out, std::ostream& err) {
    try {
        const Dataset dataset = io::load_dataset_file(config.dataset_path);
        const strategy::EngineOptions engine = config.engine.resolve();

        strategy::StrategyOptions options;
        options.dims = config.dimensions;
        options.eval.n_values = config.n_values;
        if (std::find(options.eval.n_values.begin(), options.eval.n_values.end(),
                      config.n_select) == options.eval.n_values.end()) {
            options.eval.n_values.push_back(config.n_select);
        }
        options.eval.per_user = config.per_user;
        options.eval.threads = engine.threads;
        options.n_select = config.n_select;
        options.ratio = config.ratio;
        options.validation_fraction = config.validation_fraction;
        options.seed = config.seed;
        options.min_segment_sessions = config.min_segment_sessions;

        const strategy::StrategyResult result =
            strategy::run_strategy(dataset, engine, config.strategy, options);

        const std::string method = method_label(config.strategy);
        write_reports(config.output_dir, evaluate_header(config, result),
                      report_records(method, config.engine.algorithm, result.chosen_dims,
                                     result.report),
                      out);

        out << "strategy " << config.strategy << " (" << config.engine.algorithm << ")";
        if (!result.chosen_dims.empty()) {
            out << ", dims " << join(result.chosen_dims, '+');
        }
        out << ": F1@" << config.n_select << " = "
            << format_cell(result.report.at(config.n_select).f1) << " over "
            << result.report.cases << " cases (" << result.report.skipped << " skipped)\n";
        return kExitOk;
    } catch (const ResourceLimitError& e) {
        err << "error: resource limit: " << e.what() << "\n";
        err << "result recorded as '-'\n";
        try {
            std::filesystem::create_directories(config.output_dir);
            auto csv = open_output(std::filesystem::path(config.output_dir) / "report.csv");
            csv << "method,algorithm,dims,N,recall,precision,f1,cases,skipped\n";
            csv << method_label(config.strategy) << ',' << config.engine.algorithm
                << ",,-,-,-,-,-,-\n";
        } catch (const Error&) {
        }
        return kExitResourceLimit;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}

int run_sweep(const SweepConfig& config, std::ostream& out, std::ostream& err) {
    try {
        const Dataset dataset = io::load_dataset_file(config.dataset_path);
        const strategy::EngineOptions engine = config.engine.resolve();

        std::vector<std::string> dims = config.dimensions;
        if (dims.empty()) {
            for (const ContextDimension& dim : dataset.dimensions.all()) {
                dims.push_back(dim.name);
            }
        }
        eval::EvalOptions eval_options;
        eval_options.n_values = config.n_values;
        eval_options.per_user = config.per_user;
        eval_options.threads = engine.threads;

        const auto sweep = strategy::sweep_single_dimensions(dataset, engine, dims,
                                                             config.ratio, config.seed,
                                                             eval_options);

        json header;
        header["type"] = "header";
        header["command"] = "sweep";
        header["algorithm"] = config.engine.algorithm;
        header["dims"] = dims;
        header["seed"] = config.seed;
        header["ratio"] = config.ratio;
        header["n_values"] = config.n_values;

        std::vector<json> records;
        for (const auto& [dim, entry] : sweep) {
            const bool baseline = dim == strategy::kBaselineKey;
            const std::string method = baseline ? "user_x_item" : "davi_" + dim;
            const std::vector<std::string> dims_used =
                baseline ? std::vector<std::string>{} : std::vector<std::string>{dim};
            if (entry.report) {
                for (json& record :
                     report_records(method, config.engine.algorithm, dims_used, *entry.report)) {
                    records.push_back(std::move(record));
                }
            } else {
                err << "warning: dimension '" << dim << "' failed: " << entry.error << "\n";
                json record;
                record["type"] = "error";
                record["method"] = method;
                record["algorithm"] = config.engine.algorithm;
                record["dims"] = dims_used;
                record["error"] = entry.error;
                records.push_back(std::move(record));
            }
        }
        write_reports(config.output_dir, header, records, out);
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int run_recommend(const RecommendConfig& config, std::ostream& out, std::ostream& err) {
    try {
        if (config.items.empty()) {
            throw ValidationError("at least one --items token is required");
        }
        std::ifstream model_in(config.model_path);
        if (!model_in) {
            throw ParseError("cannot open model file '" + config.model_path + "'");
        }
        std::string magic;
        std::getline(model_in, magic);
        model_in.seekg(0);

        Query query;
        query.observables = config.items;
        for (const std::string& pair : config.context) {
            const std::size_t eq = pair.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw ValidationError("context flag '" + pair + "' must be dim=value");
            }
            const std::string dim = pair.substr(0, eq);
            const std::string value = pair.substr(eq + 1);
            query.observables.push_back(VirtualItemId::encode(dim, value));
            query.active_context[dim].insert(value);
        }

        std::vector<Scored> recs;
        if (magic.rfind("ctxrec-cf-model", 0) == 0) {
            const cf::SimilarityModel model = cf::SimilarityModel::load(model_in);
            recs = model.recommend_topn(query.observables, config.n);
        } else if (magic.rfind("ctxrec-ar-model", 0) == 0) {
            const ar::ArRecommender model(ar::RuleModel::load(model_in));
            recs = model.recommend(query, config.n);
        } else {
            throw ParseError("'" + config.model_path + "' is not a ctxrec model file");
        }

        for (const Scored& rec : recs) {
            out << rec.item << "\t" << format_double(rec.score) << "\n";
        }
        if (recs.empty()) {
            err << "no recommendations (no candidate scored above zero)\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int run_compare(const CompareConfig& config, std::ostream& out, std::ostream& err) {
    try {
        const Dataset dataset = io::load_dataset_file(config.dataset_path);
        const std::vector<std::string> strategies = {"baseline", "best", "forward", "all",
                                                     "combined"};
        const std::vector<std::string> algorithms = {"cf", "ar"};

        strategy::StrategyOptions options;
        options.dims = config.dimensions;
        options.eval.n_values = config.n_values;
        if (std::find(options.eval.n_values.begin(), options.eval.n_values.end(),
                      config.n_select) == options.eval.n_values.end()) {
            options.eval.n_values.push_back(config.n_select);
        }
        options.n_select = config.n_select;
        options.ratio = config.ratio;
        options.validation_fraction = config.validation_fraction;
        options.seed = config.seed;
        options.min_segment_sessions = config.min_segment_sessions;

        json header;
        header["type"] = "header";
        header["command"] = "compare";
        header["seed"] = config.seed;
        header["ratio"] = config.ratio;
        header["n_select"] = config.n_select;

        std::vector<json> records;
        std::map<std::string, std::map<std::string, std::string>> cells;  // method -> algo -> F1
        for (const std::string& algorithm : algorithms) {
            EngineConfig engine_config = config.engine;
            engine_config.algorithm = algorithm;
            const strategy::EngineOptions engine = engine_config.resolve();
            options.eval.threads = engine.threads;
            for (const std::string& spec : strategies) {
                const std::string method = method_label(spec);
                try {
                    const strategy::StrategyResult result =
                        strategy::run_strategy(dataset, engine, spec, options);
                    cells[method][algorithm] =
                        format_cell(result.report.at(config.n_select).f1);
                    for (json& record : report_records(method, algorithm, result.chosen_dims,
                                                       result.report)) {
                        records.push_back(std::move(record));
                    }
                } catch (const ResourceLimitError& e) {
                    err << "warning: " << method << " (" << algorithm
                        << ") hit a resource limit: " << e.what() << "\n";
                    cells[method][algorithm] = "-";
                    json record;
                    record["type"] = "error";
                    record["method"] = method;
                    record["algorithm"] = algorithm;
                    record["error"] = e.what();
                    records.push_back(std::move(record));
                }
            }
        }

        write_reports(config.output_dir, header, records, out);

        auto table = open_output(std::filesystem::path(config.output_dir) / "comparison.csv");
        table << "method,cf,ar\n";
        out << "method,cf,ar\n";
        for (const std::string& spec : strategies) {
            const std::string method = method_label(spec);
            const std::string line =
                method + "," + cells[method]["cf"] + "," + cells[method]["ar"];
            table << line << "\n";
            out << line << "\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace ctxrec::cli
