#pragma once

#include <string>
#include <vector>

#include "msvol/calibration.hpp"

namespace msvol {

// Option chain plus the leading '#' metadata comments, which survive a
// serialize/parse round trip verbatim.
struct ChainFile {
    std::vector<std::string> comments;  // without the '#'-line terminator
    std::vector<OptionQuote> quotes;

    friend bool operator==(const ChainFile&, const ChainFile&) = default;
};

struct ParseIssue {
    int line = 0;  // 1-based line number in the input text
    std::string message;
};

// All row-level problems are collected rather than aborting at the first one.
// A header mismatch is fatal, though: rows cannot be interpreted without it.
struct ChainParseResult {
    ChainFile chain;
    std::vector<ParseIssue> errors;
};

extern const char* const kChainHeader;

ChainParseResult parse_chain(const std::string& text);

// Shortest round-trip float formatting; parse(serialize(c)) == c.
std::string serialize_chain(const ChainFile& chain);

// File variants; load throws DataError summarizing any parse issues.
ChainFile load_chain(const std::string& path);
void save_chain(const ChainFile& chain, const std::string& path);

} // namespace msvol
