// SPDX-License-Identifier: Apache-2.0
#include "planwork/text.hpp"

#include "planwork/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace planwork {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedStep: return "MalformedStep";
    case ErrorCode::DuplicateVar: return "DuplicateVar";
    case ErrorCode::BadToolSyntax: return "BadToolSyntax";
    case ErrorCode::ForwardReference: return "ForwardReference";
    case ErrorCode::UndefinedReference: return "UndefinedReference";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::MissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::EmptyTask: return "EmptyTask";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::ScriptExhausted: return "ScriptExhausted";
    case ErrorCode::ContextOverflow: return "ContextOverflow";
    case ErrorCode::InvalidRequest: return "InvalidRequest";
    case ErrorCode::UnresolvedReference: return "UnresolvedReference";
    case ErrorCode::UnknownTool: return "UnknownTool";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::PlannerParseFailure: return "PlannerParseFailure";
    case ErrorCode::NoAction: return "NoAction";
    case ErrorCode::UnknownVocabulary: return "UnknownVocabulary";
    case ErrorCode::MissingBreakdown: return "MissingBreakdown";
    case ErrorCode::UnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::AlignmentMismatch: return "AlignmentMismatch";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
    }
    return "Unknown";
}

namespace text {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
} // namespace

std::string_view trim_left(std::string_view s) {
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    return s;
}

std::string_view trim_right(std::string_view s) {
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

std::string_view trim(std::string_view s) { return trim_right(trim_left(s)); }

std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> lines;
    while (!s.empty()) {
        auto nl = s.find('\n');
        auto line = s.substr(0, nl);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos)
            break;
        s.remove_prefix(nl + 1);
    }
    return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0)
            out += sep;
        out += parts[i];
    }
    return out;
}

bool starts_with_icase(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size())
        return false;
    return std::equal(prefix.begin(), prefix.end(), s.begin(), [](char a, char b) {
        return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
    });
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::Io, "cannot write " + path);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out)
        throw Error(ErrorCode::Io, "write failed for " + path);
}

} // namespace text
} // namespace planwork
