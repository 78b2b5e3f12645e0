#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ctxrank/context.hpp"
#include "ctxrank/errors.hpp"

namespace ctxrank {

/// One normalized audit event. Everything but the process id is optional;
/// missing fields simply contribute nothing to the derived contexts.
struct EventRecord {
    std::string process_id;
    std::optional<std::string> event_type;
    std::optional<std::string> exec_name;
    std::optional<std::string> parent_exec_name;
    std::optional<std::string> remote_ip;
    std::optional<std::uint16_t> remote_port;
};

enum class ContextKind { pe, px, pp, pn };

inline const char* to_string(ContextKind kind) {
    switch (kind) {
        case ContextKind::pe: return "PE";
        case ContextKind::px: return "PX";
        case ContextKind::pp: return "PP";
        case ContextKind::pn: return "PN";
    }
    return "?";
}

inline ContextKind context_kind_from_string(std::string text) {
    for (auto& c : text) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (text == "PE") return ContextKind::pe;
    if (text == "PX") return ContextKind::px;
    if (text == "PP") return ContextKind::pp;
    if (text == "PN") return ContextKind::pn;
    throw ConfigError("unknown context kind: '" + text + "' (expected PE, PX, PP or PN)");
}

namespace detail {

/// Attribute values an event contributes for a given context kind. PN yields
/// up to two values (the IP and the port are independent columns).
inline void attribute_values(const EventRecord& ev, ContextKind kind,
                             std::vector<std::string>& out) {
    out.clear();
    switch (kind) {
        case ContextKind::pe:
            if (ev.event_type) out.push_back(*ev.event_type);
            break;
        case ContextKind::px:
            if (ev.exec_name) out.push_back(*ev.exec_name);
            break;
        case ContextKind::pp:
            if (ev.parent_exec_name) out.push_back(*ev.parent_exec_name);
            break;
        case ContextKind::pn:
            if (ev.remote_ip) out.push_back(*ev.remote_ip);
            if (ev.remote_port) out.push_back(std::to_string(*ev.remote_port));
            break;
    }
}

}  // namespace detail

/// Builds one Boolean context from an event stream. A process gets a row iff
/// it exhibits at least one attribute of the requested kind; duplicate events
/// collapse to a presence bit. Row and column order is first appearance,
/// which keeps the order-sensitive streaming scorers deterministic.
inline Context extract_context(std::span<const EventRecord> events, ContextKind kind) {
    Context ctx;
    ctx.name = to_string(kind);

    std::unordered_map<std::string, std::size_t> row_index;
    std::unordered_map<std::string, std::uint32_t> attr_index;
    std::vector<std::vector<std::uint32_t>> bits;
    std::vector<std::string> values;

    for (const auto& ev : events) {
        if (ev.process_id.empty())
            throw ContractViolation("event with empty process id");
        detail::attribute_values(ev, kind, values);
        if (values.empty()) continue;

        auto [rit, new_row] = row_index.try_emplace(ev.process_id, ctx.row_ids.size());
        if (new_row) {
            ctx.row_ids.push_back(ev.process_id);
            bits.emplace_back();
        }
        auto& row = bits[rit->second];
        for (const auto& value : values) {
            auto [ait, new_attr] =
                attr_index.try_emplace(value, static_cast<std::uint32_t>(ctx.attributes.size()));
            if (new_attr) ctx.attributes.push_back(value);
            std::uint32_t j = ait->second;
            auto pos = std::lower_bound(row.begin(), row.end(), j);
            if (pos == row.end() || *pos != j) row.insert(pos, j);
        }
    }
    ctx.rows = std::move(bits);
    return ctx;
}

/// Joins contexts into one wide context. Attributes are prefixed with their
/// source context name; a row absent from a part contributes zeros for that
/// part's columns. Row order is first appearance across parts in list order.
inline Context join_contexts(const std::vector<Context>& parts, std::string name = "PA") {
    if (parts.empty()) throw ContractViolation("join_contexts: no parts");

    Context out;
    out.name = std::move(name);

    std::unordered_map<std::string, std::size_t> row_index;
    for (const auto& part : parts) {
        for (const auto& id : part.row_ids) {
            if (row_index.try_emplace(id, out.row_ids.size()).second) out.row_ids.push_back(id);
        }
    }
    out.rows.resize(out.row_ids.size());

    std::unordered_map<std::string, bool> seen_attr;
    for (const auto& part : parts) {
        const std::uint32_t offset = static_cast<std::uint32_t>(out.attributes.size());
        for (const auto& attr : part.attributes) {
            std::string prefixed = part.name + ":" + attr;
            if (!seen_attr.try_emplace(prefixed, true).second)
                throw ContractViolation("join_contexts: duplicate attribute '" + prefixed + "'");
            out.attributes.push_back(std::move(prefixed));
        }
        for (std::size_t r = 0; r < part.rows.size(); ++r) {
            auto& dst = out.rows[row_index.at(part.row_ids[r])];
            for (std::uint32_t j : part.rows[r]) dst.push_back(offset + j);
        }
    }
    for (auto& row : out.rows) std::sort(row.begin(), row.end());
    return out;
}

/// Parses one JSON event object. Field names follow the ingestion format:
/// pid (required), event, exec, parent_exec, ip, port.
inline EventRecord event_from_json(const nlohmann::json& obj, std::size_t line) {
    if (!obj.is_object()) throw ParseError("event is not a JSON object", line);
    EventRecord ev;
    if (!obj.contains("pid") || !obj["pid"].is_string() || obj["pid"].get<std::string>().empty())
        throw ParseError("event missing non-empty string field 'pid'", line);
    ev.process_id = obj["pid"].get<std::string>();

    auto read_string = [&](const char* key) -> std::optional<std::string> {
        if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
        if (!obj[key].is_string()) throw ParseError(std::string("field '") + key + "' must be a string", line);
        return obj[key].get<std::string>();
    };
    ev.event_type = read_string("event");
    ev.exec_name = read_string("exec");
    ev.parent_exec_name = read_string("parent_exec");
    ev.remote_ip = read_string("ip");
    if (obj.contains("port") && !obj["port"].is_null()) {
        if (!obj["port"].is_number_integer())
            throw ParseError("field 'port' must be an integer", line);
        auto port = obj["port"].get<std::int64_t>();
        if (port < 0 || port > 65535)
            throw ParseError("field 'port' out of range 0-65535", line);
        ev.remote_port = static_cast<std::uint16_t>(port);
    }
    return ev;
}

/// Reads JSON-lines events. Blank lines are skipped; any malformed line
/// raises ParseError with its 1-based line number.
inline std::vector<EventRecord> read_events_jsonl(std::istream& in) {
    std::vector<EventRecord> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded()) throw ParseError("malformed JSON", line_no);
        events.push_back(event_from_json(obj, line_no));
    }
    return events;
}

inline std::vector<EventRecord> read_events_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open events file: " + path);
    return read_events_jsonl(in);
}

}  // namespace ctxrank
