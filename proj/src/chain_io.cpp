#include "msvol/chain_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

namespace msvol {

const char* const kChainHeader =
    "expiry_years,strike,spot,rate,kind,iv,price,weight";

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

bool parse_double(std::string_view s, double& out) {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

std::string fmt(double x) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, p);
}

} // namespace

ChainParseResult parse_chain(const std::string& text) {
    ChainParseResult res;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    bool header_seen = false;

    while (std::getline(in, raw)) {
        ++lineno;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '#') {
            res.chain.comments.emplace_back(line);
            continue;
        }
        if (!header_seen) {
            if (line != kChainHeader) {
                res.errors.push_back(
                    {lineno, std::string("header mismatch: expected '") +
                                 kChainHeader + "', found '" + std::string(line) +
                                 "'"});
                return res;  // column meaning unknown; nothing else is parseable
            }
            header_seen = true;
            continue;
        }

        const std::vector<std::string_view> f = split_fields(line);
        if (f.size() != 8) {
            res.errors.push_back(
                {lineno, "expected 8 fields, found " + std::to_string(f.size())});
            continue;
        }
        OptionQuote q;
        std::string err;
        const auto need = [&](std::string_view s, double& out, const char* name) {
            if (!parse_double(s, out))
                err = std::string("bad ") + name + " '" + std::string(s) + "'";
        };
        need(f[0], q.expiry_years, "expiry_years");
        if (err.empty()) need(f[1], q.strike, "strike");
        if (err.empty()) need(f[2], q.spot, "spot");
        if (err.empty()) need(f[3], q.rate, "rate");
        if (err.empty()) {
            if (f[4] == "C")
                q.kind = OptionKind::Call;
            else if (f[4] == "P")
                q.kind = OptionKind::Put;
            else
                err = "kind must be C or P, found '" + std::string(f[4]) + "'";
        }
        if (err.empty() && !f[5].empty()) {
            double v;
            need(f[5], v, "iv");
            if (err.empty()) q.iv = v;
        }
        if (err.empty() && !f[6].empty()) {
            double v;
            need(f[6], v, "price");
            if (err.empty()) q.price = v;
        }
        if (err.empty() && !q.iv && !q.price) err = "iv and price both empty";
        if (err.empty()) need(f[7], q.weight, "weight");

        if (!err.empty()) {
            res.errors.push_back({lineno, err});
            continue;
        }
        res.chain.quotes.push_back(q);
    }
    if (!header_seen)
        res.errors.push_back({lineno + 1, std::string("header mismatch: expected '") +
                                              kChainHeader + "', found end of file"});
    return res;
}

std::string serialize_chain(const ChainFile& chain) {
    std::string out;
    for (const std::string& c : chain.comments) {
        out += c;
        out += '\n';
    }
    out += kChainHeader;
    out += '\n';
    for (const OptionQuote& q : chain.quotes) {
        out += fmt(q.expiry_years);
        out += ',';
        out += fmt(q.strike);
        out += ',';
        out += fmt(q.spot);
        out += ',';
        out += fmt(q.rate);
        out += ',';
        out += q.kind == OptionKind::Call ? 'C' : 'P';
        out += ',';
        if (q.iv) out += fmt(*q.iv);
        out += ',';
        if (q.price) out += fmt(*q.price);
        out += ',';
        out += fmt(q.weight);
        out += '\n';
    }
    return out;
}

ChainFile load_chain(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open chain file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    ChainParseResult res = parse_chain(buf.str());
    if (!res.errors.empty()) {
        std::string msg = path + ": " + std::to_string(res.errors.size()) +
                          " parse error(s):";
        const std::size_t shown = std::min<std::size_t>(res.errors.size(), 10);
        for (std::size_t i = 0; i < shown; ++i)
            msg += "\n  line " + std::to_string(res.errors[i].line) + ": " +
                   res.errors[i].message;
        if (shown < res.errors.size()) msg += "\n  ...";
        throw DataError(msg);
    }
    return std::move(res.chain);
}

void save_chain(const ChainFile& chain, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write chain file: " + path);
    out << serialize_chain(chain);
    if (!out) throw DataError("write failed: " + path);
}

} // namespace msvol
