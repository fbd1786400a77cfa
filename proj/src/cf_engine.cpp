#include "ctxrec/cf_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>

#include "ctxrec/parallel.hpp"

namespace ctxrec::cf {

namespace {

constexpr std::string_view kModelMagic = "ctxrec-cf-model 1";

void check_serializable(const std::string& token) {
    if (token.find('\t') != std::string::npos || token.find('\n') != std::string::npos) {
        throw ParseError("token '" + token + "' contains tab or newline");
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

double cosine_similarity(const std::unordered_set<std::string>& a,
                         const std::unordered_set<std::string>& b) {
    if (a.empty() || b.empty()) {
        throw UndefinedSimilarityError("cosine similarity over an empty occurrence set");
    }
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    std::size_t intersection = 0;
    for (const std::string& s : small) {
        intersection += large.count(s);
    }
    return static_cast<double>(intersection) /
           std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

SimilarityModel SimilarityModel::build(std::span<const davi::AugmentedSession> sessions,
                                       const BuildOptions& options) {
    // One column per co-occurrence unit, each a unique token set.
    std::vector<std::vector<std::string>> columns;
    if (options.unit == BuildOptions::Unit::session) {
        columns.reserve(sessions.size());
        for (const auto& s : sessions) {
            columns.push_back(s.tokens);
        }
    } else {
        std::map<std::string, std::set<std::string>> by_user;
        for (const auto& s : sessions) {
            by_user[s.user_id].insert(s.tokens.begin(), s.tokens.end());
        }
        columns.reserve(by_user.size());
        for (auto& [user, tokens] : by_user) {
            columns.emplace_back(tokens.begin(), tokens.end());
        }
    }

    SimilarityModel model;
    {
        std::set<std::string> universe;
        for (const auto& column : columns) {
            universe.insert(column.begin(), column.end());
        }
        model.tokens_.assign(universe.begin(), universe.end());
    }
    model.index_.reserve(model.tokens_.size());
    for (std::uint32_t id = 0; id < model.tokens_.size(); ++id) {
        model.index_.emplace(model.tokens_[id], id);
    }
    model.is_virtual_.resize(model.tokens_.size());
    for (std::uint32_t id = 0; id < model.tokens_.size(); ++id) {
        model.is_virtual_[id] = is_virtual_token(model.tokens_[id]);
    }

    std::vector<std::vector<std::uint32_t>> id_columns(columns.size());
    std::vector<std::uint32_t> occurrences(model.tokens_.size(), 0);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        auto& ids = id_columns[c];
        ids.reserve(columns[c].size());
        for (const std::string& token : columns[c]) {
            ids.push_back(model.index_.at(token));
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        for (std::uint32_t id : ids) ++occurrences[id];
    }

    // Pairwise co-occurrence counts, partitioned by column block. Integer
    // merges make the result independent of the partitioning.
    const int threads = options.threads;
    std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> partial(
        std::max<std::size_t>(1, std::min<std::size_t>(
                                     id_columns.size(),
                                     static_cast<std::size_t>(threads <= 0 ? default_threads()
                                                                           : threads))));
    parallel_blocks(id_columns.size(), threads,
                    [&](std::size_t worker, std::size_t begin, std::size_t end) {
                        auto& counts = partial[worker];
                        for (std::size_t c = begin; c < end; ++c) {
                            const auto& ids = id_columns[c];
                            for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
                                for (std::size_t j = i + 1; j < ids.size(); ++j) {
                                    const std::uint64_t key =
                                        (static_cast<std::uint64_t>(ids[i]) << 32) | ids[j];
                                    ++counts[key];
                                }
                            }
                        }
                    });
    std::unordered_map<std::uint64_t, std::uint32_t> counts;
    for (auto& p : partial) {
        for (const auto& [key, count] : p) {
            counts[key] += count;
        }
    }

    model.rows_.resize(model.tokens_.size());
    for (const auto& [key, count] : counts) {
        const auto i = static_cast<std::uint32_t>(key >> 32);
        const auto j = static_cast<std::uint32_t>(key & 0xffffffffu);
        const double sim = static_cast<double>(count) /
                           std::sqrt(static_cast<double>(occurrences[i]) *
                                     static_cast<double>(occurrences[j]));
        model.rows_[i].emplace_back(j, sim);
        model.rows_[j].emplace_back(i, sim);
    }
    for (auto& row : model.rows_) {
        std::sort(row.begin(), row.end());
    }
    return model;
}

std::size_t SimilarityModel::pair_count() const {
    std::size_t total = 0;
    for (const auto& row : rows_) total += row.size();
    return total / 2;
}

bool SimilarityModel::contains(std::string_view token) const {
    return index_.find(std::string(token)) != index_.end();
}

bool SimilarityModel::is_actual(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it != index_.end() && !is_virtual_[it->second];
}

const std::vector<std::pair<std::uint32_t, double>>* SimilarityModel::row(
    std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return nullptr;
    return &rows_[it->second];
}

double SimilarityModel::similarity(std::string_view a, std::string_view b) const {
    auto ia = index_.find(std::string(a));
    auto ib = index_.find(std::string(b));
    if (ia == index_.end() || ib == index_.end()) return 0.0;
    if (ia->second == ib->second) return 1.0;
    const auto& row = rows_[ia->second];
    auto it = std::lower_bound(row.begin(), row.end(),
                               std::make_pair(ib->second, 0.0),
                               [](const auto& x, const auto& y) { return x.first < y.first; });
    if (it != row.end() && it->first == ib->second) return it->second;
    return 0.0;
}

double SimilarityModel::score_candidate(std::string_view candidate,
                                        const std::vector<std::string>& observables,
                                        std::size_t neighbors) const {
    if (observables.empty()) return 0.0;
    if (!contains(candidate)) return 0.0;
    std::vector<double> sims;
    sims.reserve(observables.size());
    for (const std::string& o : observables) {
        double s = similarity(candidate, o);
        if (s > 0.0) sims.push_back(s);
    }
    if (neighbors > 0 && sims.size() > neighbors) {
        std::sort(sims.begin(), sims.end(), std::greater<>());
        sims.resize(neighbors);
    }
    double sum = 0.0;
    for (double s : sims) sum += s;
    return sum / static_cast<double>(observables.size());
}

std::vector<Scored> SimilarityModel::recommend_topn(const std::vector<std::string>& observables,
                                                    int n, std::size_t neighbors) const {
    if (n < 1) {
        throw ValidationError("top-N size must be at least 1");
    }
    if (observables.empty()) return {};
    std::unordered_set<std::string_view> excluded(observables.begin(), observables.end());

    // Candidate sims collected in observable order so scores match a direct
    // per-candidate sum over O.
    std::unordered_map<std::uint32_t, std::vector<double>> collected;
    for (const std::string& o : observables) {
        const auto* r = row(o);
        if (r == nullptr) continue;
        for (const auto& [j, sim] : *r) {
            if (is_virtual_[j]) continue;
            if (excluded.count(tokens_[j]) != 0) continue;
            collected[j].push_back(sim);
        }
    }

    const double denom = static_cast<double>(observables.size());
    std::vector<Scored> scored;
    scored.reserve(collected.size());
    for (auto& [id, sims] : collected) {
        if (neighbors > 0 && sims.size() > neighbors) {
            std::sort(sims.begin(), sims.end(), std::greater<>());
            sims.resize(neighbors);
        }
        double sum = 0.0;
        for (double s : sims) sum += s;
        const double score = sum / denom;
        if (score > 0.0) {
            scored.push_back({tokens_[id], score});
        }
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.item < b.item;
    });
    if (scored.size() > static_cast<std::size_t>(n)) {
        scored.resize(static_cast<std::size_t>(n));
    }
    return scored;
}

void SimilarityModel::for_each_pair(
    const std::function<void(const std::string&, const std::string&, double)>& fn) const {
    for (std::uint32_t i = 0; i < rows_.size(); ++i) {
        for (const auto& [j, sim] : rows_[i]) {
            if (j > i) fn(tokens_[i], tokens_[j], sim);
        }
    }
}

void SimilarityModel::save(std::ostream& out) const {
    out << kModelMagic << "\n";
    out << "tokens " << tokens_.size() << "\n";
    for (std::uint32_t i = 0; i < tokens_.size(); ++i) {
        check_serializable(tokens_[i]);
        out << tokens_[i] << "\t" << (is_virtual_[i] ? "virtual" : "actual") << "\n";
    }
    out << "pairs " << pair_count() << "\n";
    for_each_pair([&](const std::string& a, const std::string& b, double sim) {
        out << a << "\t" << b << "\t" << format_double(sim) << "\n";
    });
    if (!out) {
        throw ParseError("failed to write similarity model");
    }
}

SimilarityModel SimilarityModel::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kModelMagic) {
        throw ParseError("not a similarity model file");
    }
    auto read_count = [&](std::string_view keyword) {
        if (!std::getline(in, line)) {
            throw ParseError("similarity model truncated");
        }
        const std::string prefix = std::string(keyword) + " ";
        std::size_t count = 0;
        auto [ptr, ec] = std::from_chars(line.data() + std::min(line.size(), prefix.size()),
                                         line.data() + line.size(), count);
        if (line.rfind(prefix, 0) != 0 || ec != std::errc() ||
            ptr != line.data() + line.size()) {
            throw ParseError("similarity model: expected '" + std::string(keyword) + "' section");
        }
        return count;
    };

    SimilarityModel model;
    const std::size_t n_tokens = read_count("tokens");
    model.tokens_.reserve(n_tokens);
    model.is_virtual_.reserve(n_tokens);
    for (std::size_t i = 0; i < n_tokens; ++i) {
        if (!std::getline(in, line)) {
            throw ParseError("similarity model truncated in token table");
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError("similarity model: bad token line '" + line + "'");
        }
        const std::string kind = line.substr(tab + 1);
        if (kind != "actual" && kind != "virtual") {
            throw ParseError("similarity model: bad token kind '" + kind + "'");
        }
        model.tokens_.push_back(line.substr(0, tab));
        model.is_virtual_.push_back(kind == "virtual");
    }
    for (std::uint32_t id = 0; id < model.tokens_.size(); ++id) {
        if (!model.index_.emplace(model.tokens_[id], id).second) {
            throw ParseError("similarity model: duplicate token '" + model.tokens_[id] + "'");
        }
    }
    model.rows_.resize(model.tokens_.size());

    const std::size_t n_pairs = read_count("pairs");
    for (std::size_t p = 0; p < n_pairs; ++p) {
        if (!std::getline(in, line)) {
            throw ParseError("similarity model truncated in pair section");
        }
        const std::size_t t1 = line.find('\t');
        const std::size_t t2 = t1 == std::string::npos ? std::string::npos
                                                       : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) {
            throw ParseError("similarity model: bad pair line '" + line + "'");
        }
        const std::string a = line.substr(0, t1);
        const std::string b = line.substr(t1 + 1, t2 - t1 - 1);
        const std::string value = line.substr(t2 + 1);
        double sim = 0.0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), sim);
        if (ec != std::errc() || ptr != value.data() + value.size()) {
            throw ParseError("similarity model: bad similarity value '" + value + "'");
        }
        if (!(sim > 0.0) || sim > 1.0 + 1e-12) {
            throw ParseError("similarity model: similarity out of range: " + value);
        }
        auto ia = model.index_.find(a);
        auto ib = model.index_.find(b);
        if (ia == model.index_.end() || ib == model.index_.end() || ia->second == ib->second) {
            throw ParseError("similarity model: pair references unknown token");
        }
        model.rows_[ia->second].emplace_back(ib->second, sim);
        model.rows_[ib->second].emplace_back(ia->second, sim);
    }
    for (auto& row : model.rows_) {
        std::sort(row.begin(), row.end());
    }
    return model;
}

}  // namespace ctxrec::cf
