#include "ibsead/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ibsead/errors.hpp"
#include "json.hpp"

namespace ibsead {

int dataset::n_classes() const {
    int top = -1;
    for (const auto& r : rows) top = std::max(top, r.label);
    return top + 1;
}

void dataset::validate() const {
    if (rows.empty()) return;
    const std::size_t want = rows.front().features.size();
    for (const auto& r : rows)
        if (r.features.size() != want)
            throw arity_mismatch_error(r.features.size(), want);
}

dataset load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error(path.string());
    dataset ds;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw io_error(path.string() + ": bad JSON line");
        }
        data_row row;
        row.features = j.at("features").get<std::vector<double>>();
        row.label = j.at("label").get<int>();
        ds.rows.push_back(std::move(row));
    }
    ds.validate();
    return ds;
}

void save_jsonl(const dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error(path.string());
    for (const auto& r : ds.rows) {
        nlohmann::json j{{"features", r.features}, {"label", r.label}};
        out << j.dump() << '\n';
    }
    if (!out) throw io_error(path.string());
}

truth_table load_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error(path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception&) {
        throw io_error(path.string() + ": bad JSON");
    }
    truth_table t;
    const auto& hidden = j.at("hidden_affected");
    const auto& felt = j.at("felt_effect");
    const auto& quality = j.at("quality");
    if (hidden.size() != felt.size() || hidden.size() != quality.size())
        throw io_error(path.string() + ": column lengths differ");
    for (std::size_t i = 0; i < hidden.size(); ++i)
        t.push_back(row_truth{hidden[i].get<bool>(), felt[i].get<double>(), quality[i].get<double>()});
    return t;
}

void save_truth(const truth_table& truth, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error(path.string());
    std::vector<bool> hidden;
    std::vector<double> felt, quality;
    for (const auto& r : truth) {
        hidden.push_back(r.hidden_affected);
        felt.push_back(r.felt_effect);
        quality.push_back(r.quality);
    }
    nlohmann::json j{{"hidden_affected", hidden}, {"felt_effect", felt}, {"quality", quality}};
    out << j.dump(2) << '\n';
    if (!out) throw io_error(path.string());
}

} // namespace ibsead
