#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ctxrank/context.hpp"
#include "ctxrank/errors.hpp"
#include "ctxrank/rational.hpp"
#include "ctxrank/score.hpp"

namespace ctxrank {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

}  // namespace detail

/// Context CSV: header `Object_ID,<attr1>,...,<attrM>`, cells strictly 0/1,
/// UTF-8, LF newlines. Round-trips exactly, including row and column order.
inline void save_context(const Context& ctx, std::ostream& out) {
    for (const auto& attr : ctx.attributes) {
        if (attr.find_first_of(",\n\r") != std::string::npos)
            throw ConfigError("attribute name not representable in CSV: '" + attr + "'");
    }
    for (const auto& id : ctx.row_ids) {
        if (id.find_first_of(",\n\r") != std::string::npos)
            throw ConfigError("row id not representable in CSV: '" + id + "'");
    }
    out << "Object_ID";
    for (const auto& attr : ctx.attributes) out << ',' << attr;
    out << '\n';
    for (std::size_t r = 0; r < ctx.row_count(); ++r) {
        out << ctx.row_ids[r];
        const auto& row = ctx.rows[r];
        std::size_t k = 0;
        for (std::uint32_t j = 0; j < ctx.attribute_count(); ++j) {
            bool set = k < row.size() && row[k] == j;
            if (set) ++k;
            out << (set ? ",1" : ",0");
        }
        out << '\n';
    }
}

inline void save_context(const Context& ctx, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write context file: " + path);
    save_context(ctx, out);
}

inline Context load_context(std::istream& in, std::string name = "custom") {
    Context ctx;
    ctx.name = std::move(name);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty context file", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "Object_ID")
        throw ParseError("context header must start with 'Object_ID'", 1, 1);

    std::unordered_set<std::string> seen_attrs;
    for (std::size_t j = 1; j < header.size(); ++j) {
        if (header[j].empty()) throw ParseError("empty attribute name", 1, j + 1);
        if (!seen_attrs.insert(header[j]).second)
            throw ParseError("duplicate attribute name '" + header[j] + "'", 1, j + 1);
        ctx.attributes.push_back(header[j]);
    }

    std::unordered_set<std::string> seen_rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " cells, got " +
                                 std::to_string(cells.size()),
                             line_no);
        if (cells[0].empty()) throw ParseError("empty row id", line_no, 1);
        if (!seen_rows.insert(cells[0]).second)
            throw ParseError("duplicate row id '" + cells[0] + "'", line_no, 1);
        ctx.row_ids.push_back(cells[0]);
        std::vector<std::uint32_t> row;
        for (std::size_t j = 1; j < cells.size(); ++j) {
            if (cells[j] == "1")
                row.push_back(static_cast<std::uint32_t>(j - 1));
            else if (cells[j] != "0")
                throw ParseError("cell must be 0 or 1, got '" + cells[j] + "'", line_no, j + 1);
        }
        ctx.rows.push_back(std::move(row));
    }
    return ctx;
}

inline Context load_context(const std::string& path, std::string name = "") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open context file: " + path);
    if (name.empty()) {
        // default the context name to the file stem
        auto slash = path.find_last_of("/\\");
        std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
        auto dot = stem.find_last_of('.');
        if (dot != std::string::npos) stem = stem.substr(0, dot);
        name = stem.empty() ? "custom" : stem;
    }
    return load_context(in, std::move(name));
}

/// Ground truth: one row id per line, '#' starts a comment, duplicates collapse.
inline GroundTruth load_ground_truth(std::istream& in) {
    GroundTruth truth;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        auto end = line.find_last_not_of(" \t\r");
        truth.attack_ids.insert(line.substr(begin, end - begin + 1));
    }
    return truth;
}

inline GroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ground truth file: " + path);
    return load_ground_truth(in);
}

/// Scores CSV: a `# key=value ...` metadata comment followed by
/// `row_id,score` rows in context order. The polarity travels with the file
/// so evaluation never needs to know the algorithm.
inline void save_scores(std::ostream& out, const std::vector<std::string>& row_ids,
                        const std::vector<std::string>& rendered_scores, Polarity polarity,
                        const std::string& algorithm, const std::string& params,
                        const std::string& precision) {
    out << "# algorithm=" << algorithm << " params=" << (params.empty() ? "-" : params)
        << " polarity=" << to_string(polarity) << " precision=" << precision << '\n';
    out << "row_id,score\n";
    for (std::size_t i = 0; i < row_ids.size(); ++i)
        out << row_ids[i] << ',' << rendered_scores[i] << '\n';
}

struct LoadedScores {
    Polarity polarity = Polarity::low_is_anomalous;
    std::vector<std::string> row_ids;
    std::vector<Rational> exact;   // populated when every cell parsed as a rational
    std::vector<double> values;    // always populated
    bool all_exact = false;
};

inline LoadedScores load_scores(std::istream& in) {
    LoadedScores out;
    std::string line;
    std::size_t line_no = 0;
    bool saw_polarity = false;
    bool saw_header = false;
    out.all_exact = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string token;
            while (meta >> token) {
                auto eq = token.find('=');
                if (eq != std::string::npos && token.substr(0, eq) == "polarity") {
                    out.polarity = polarity_from_string(token.substr(eq + 1));
                    saw_polarity = true;
                }
            }
            continue;
        }
        if (!saw_header) {
            if (line.rfind("row_id,", 0) != 0)
                throw ParseError("scores header must start with 'row_id,'", line_no);
            saw_header = true;
            continue;
        }
        auto cells = detail::split_csv_line(line);
        if (cells.size() != 2) throw ParseError("expected 'row_id,score'", line_no);
        out.row_ids.push_back(cells[0]);
        if (cells[1].find('/') != std::string::npos) {
            Rational r = Rational::parse(cells[1]);
            out.exact.push_back(r);
            out.values.push_back(r.to_double());
        } else {
            try {
                out.values.push_back(std::stod(cells[1]));
            } catch (const std::logic_error&) {
                throw ParseError("bad score '" + cells[1] + "'", line_no, 2);
            }
            out.all_exact = false;
        }
    }
    if (!saw_header) throw ParseError("scores file has no header", line_no);
    if (!saw_polarity) throw ParseError("scores file has no polarity metadata line");
    if (out.all_exact && out.exact.size() != out.values.size()) out.all_exact = false;
    return out;
}

inline LoadedScores load_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scores file: " + path);
    return load_scores(in);
}

}  // namespace ctxrank
