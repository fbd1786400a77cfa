#include "ctxrec/dataset_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace ctxrec::io {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

}  // namespace

void save_dataset(const Dataset& dataset, std::ostream& out) {
    json root;
    root["format"] = "ctxrec-dataset";
    root["version"] = kFormatVersion;
    root["stats"] = {{"accesses", dataset.stats.accesses},
                     {"distinct_items", dataset.stats.distinct_items},
                     {"distinct_users", dataset.stats.distinct_users}};

    json dims = json::array();
    for (const ContextDimension& dim : dataset.dimensions.all()) {
        json d;
        d["name"] = dim.name;
        d["source"] = std::string(to_string(dim.source));
        if (dim.domain) {
            d["domain"] = *dim.domain;
        }
        dims.push_back(std::move(d));
    }
    root["dimensions"] = std::move(dims);

    json catalog = json::object();
    for (const auto& [item, attrs] : dataset.catalog) {
        catalog[item.str()] = attrs;
    }
    root["catalog"] = std::move(catalog);

    json sessions = json::array();
    for (const Session& session : dataset.sessions) {
        json s;
        s["id"] = session.session_id;
        s["user"] = session.user_id;
        json items = json::array();
        for (const ItemId& item : session.items) items.push_back(item.str());
        s["items"] = std::move(items);
        json context = json::object();
        for (const auto& [dim, values] : session.context) {
            context[dim] = values;
        }
        s["context"] = std::move(context);
        sessions.push_back(std::move(s));
    }
    root["sessions"] = std::move(sessions);

    out << root.dump(2) << "\n";
    if (!out) {
        throw ParseError("failed to write dataset file");
    }
}

Dataset load_dataset(std::istream& in) {
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw ParseError(std::string("dataset file is not valid JSON: ") + e.what());
    }
    try {
        if (root.at("format") != "ctxrec-dataset" || root.at("version") != kFormatVersion) {
            throw ParseError("not a ctxrec dataset file (or unsupported version)");
        }
        Dataset dataset;
        dataset.stats.accesses = root.at("stats").at("accesses").get<std::size_t>();
        dataset.stats.distinct_items = root.at("stats").at("distinct_items").get<std::size_t>();
        dataset.stats.distinct_users = root.at("stats").at("distinct_users").get<std::size_t>();

        for (const json& d : root.at("dimensions")) {
            ContextDimension dim;
            dim.name = d.at("name").get<std::string>();
            dim.source = dimension_source_from_string(d.at("source").get<std::string>());
            if (d.contains("domain")) {
                dim.domain = d.at("domain").get<std::set<std::string>>();
            }
            dataset.dimensions.add(std::move(dim));
        }

        for (const auto& [item, attrs] : root.at("catalog").items()) {
            dataset.catalog.emplace(ItemId(item), attrs.get<AttributeMap>());
        }

        for (const json& s : root.at("sessions")) {
            Session session;
            session.session_id = s.at("id").get<std::string>();
            session.user_id = s.at("user").get<std::string>();
            for (const json& item : s.at("items")) {
                session.items.emplace_back(item.get<std::string>());
            }
            for (const auto& [dim, values] : s.at("context").items()) {
                session.context.emplace(dim, values.get<std::set<std::string>>());
            }
            dataset.sessions.push_back(std::move(session));
        }
        return dataset;
    } catch (const json::exception& e) {
        throw ParseError(std::string("dataset file is malformed: ") + e.what());
    }
}

void save_dataset_file(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot open '" + path + "' for writing");
    }
    save_dataset(dataset, out);
}

Dataset load_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open dataset file '" + path + "'");
    }
    return load_dataset(in);
}

}  // namespace ctxrec::io
