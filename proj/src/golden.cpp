#include "msvol/golden.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace msvol {

std::string golden_digest(const std::string& input_description) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : input_description) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf, 16);
}

GoldenRecord load_golden(const std::string& dir, const std::string& name) {
    const std::string path = dir + "/" + name + ".json";
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("golden record '" + name + "' not found at " + path +
                        "; run the golden_regen tool to rebuild it from its "
                        "documented oracle");
    GoldenRecord rec;
    try {
        nlohmann::json j = nlohmann::json::parse(in);
        rec.name = j.at("name").get<std::string>();
        rec.digest = j.at("digest").get<std::string>();
        rec.tolerance = j.at("tolerance").get<double>();
        rec.oracle = j.at("oracle").get<std::string>();
        rec.labels = j.at("labels").get<std::vector<std::string>>();
        rec.values = j.at("values").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("golden record '" + name + "' is malformed (" + e.what() +
                        "); run the golden_regen tool to rebuild it");
    }
    if (!rec.labels.empty() && rec.labels.size() != rec.values.size())
        throw DataError("golden record '" + name +
                        "' has mismatched labels/values; rebuild it");
    return rec;
}

void save_golden(const std::string& dir, const GoldenRecord& record) {
    nlohmann::ordered_json j;
    j["name"] = record.name;
    j["digest"] = record.digest;
    j["tolerance"] = record.tolerance;
    j["oracle"] = record.oracle;
    j["labels"] = record.labels;
    j["values"] = record.values;
    const std::string path = dir + "/" + record.name + ".json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write golden record: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

void require_fresh(const GoldenRecord& record,
                   const std::string& input_description) {
    const std::string now = golden_digest(input_description);
    if (now != record.digest)
        throw DataError("golden record '" + record.name +
                        "' is stale: stored digest " + record.digest +
                        " but current inputs hash to " + now +
                        "; review the change, then regenerate with golden_regen");
}

GoldenCheck golden_check(const GoldenRecord& record,
                         const std::vector<double>& computed) {
    GoldenCheck res;
    if (computed.size() != record.values.size()) {
        res.pass = false;
        res.diff = "size mismatch: record has " +
                   std::to_string(record.values.size()) + " values, computed " +
                   std::to_string(computed.size());
        return res;
    }
    std::ostringstream diff;
    diff.precision(17);
    bool first = true;
    for (std::size_t i = 0; i < computed.size(); ++i) {
        const double delta = std::abs(computed[i] - record.values[i]);
        if (delta > record.tolerance || !std::isfinite(delta)) {
            res.pass = false;
            const std::string label = i < record.labels.size()
                                          ? record.labels[i]
                                          : "[" + std::to_string(i) + "]";
            diff << (first ? "" : "; ") << label << ": expected "
                 << record.values[i] << ", got " << computed[i] << " (|diff| "
                 << delta << " > tol " << record.tolerance << ")";
            first = false;
        }
    }
    res.diff = diff.str();
    return res;
}

} // namespace msvol
