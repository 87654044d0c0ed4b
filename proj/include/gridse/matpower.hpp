#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gridse/grid.hpp"

namespace gridse {

enum class ParseErrorKind {
    missing_bus_table,
    missing_branch_table,
    missing_base_mva,
    malformed_table,
    missing_slack_bus,
    multiple_slack_buses,
    duplicate_bus_id,
    unknown_bus_reference,
};

class ParseError : public std::runtime_error {
  public:
    ParseError(ParseErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ParseErrorKind kind() const { return kind_; }

  private:
    ParseErrorKind kind_;
};

namespace detail {

inline std::string strip_comments(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_comment = false;
    for (char c : text) {
        if (c == '%') in_comment = true;
        if (c == '\n') in_comment = false;
        out.push_back(in_comment ? ' ' : c);
    }
    return out;
}

/// Extracts the numeric rows of `mpc.<name> = [ ... ];`.
inline std::optional<std::vector<std::vector<double>>> find_matrix(const std::string& text,
                                                                   const std::string& name) {
    const std::string key = "mpc." + name;
    size_t pos = text.find(key);
    while (pos != std::string::npos) {
        size_t after = pos + key.size();
        // require the next non-space char to be '=' so mpc.buswhatever does not match
        size_t i = after;
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i < text.size() && text[i] == '=') break;
        pos = text.find(key, after);
    }
    if (pos == std::string::npos) return std::nullopt;
    size_t open = text.find('[', pos);
    if (open == std::string::npos)
        throw ParseError(ParseErrorKind::malformed_table, "matpower: table '" + name + "' has no opening bracket");
    size_t close = text.find(']', open);
    if (close == std::string::npos)
        throw ParseError(ParseErrorKind::malformed_table, "matpower: table '" + name + "' has no closing bracket");

    std::vector<std::vector<double>> rows;
    std::vector<double> row;
    std::string tok;
    auto flush_row = [&] {
        if (!row.empty()) {
            rows.push_back(row);
            row.clear();
        }
    };
    for (size_t i = open + 1; i < close; ++i) {
        const char c = text[i];
        if (c == ';' || c == '\n') {
            if (!tok.empty()) {
                try {
                    row.push_back(std::stod(tok));
                } catch (const std::exception&) {
                    throw ParseError(ParseErrorKind::malformed_table,
                                     "matpower: bad number '" + tok + "' in table '" + name + "'");
                }
                tok.clear();
            }
            flush_row();
        } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
            if (!tok.empty()) {
                try {
                    row.push_back(std::stod(tok));
                } catch (const std::exception&) {
                    throw ParseError(ParseErrorKind::malformed_table,
                                     "matpower: bad number '" + tok + "' in table '" + name + "'");
                }
                tok.clear();
            }
        } else {
            tok.push_back(c);
        }
    }
    if (!tok.empty()) {
        try {
            row.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ParseError(ParseErrorKind::malformed_table,
                             "matpower: bad number '" + tok + "' in table '" + name + "'");
        }
    }
    flush_row();
    return rows;
}

inline std::optional<double> find_scalar(const std::string& text, const std::string& name) {
    const std::string key = "mpc." + name;
    size_t pos = text.find(key);
    if (pos == std::string::npos) return std::nullopt;
    size_t eq = text.find('=', pos);
    if (eq == std::string::npos) return std::nullopt;
    std::istringstream iss(text.substr(eq + 1));
    double v;
    if (!(iss >> v)) return std::nullopt;
    return v;
}

}  // namespace detail

/// Parses a Matpower-style case body (baseMVA, bus, branch, gen tables).
/// Loads, shunts and branch impedances are returned in per-unit on the
/// system base; out-of-service branches and generators are dropped.
inline GridCase parse_case(std::string_view text, std::string name = "case") {
    const std::string body = detail::strip_comments(text);

    auto bus_rows = detail::find_matrix(body, "bus");
    if (!bus_rows || bus_rows->empty())
        throw ParseError(ParseErrorKind::missing_bus_table, "matpower: missing bus table");
    auto branch_rows = detail::find_matrix(body, "branch");
    if (!branch_rows || branch_rows->empty())
        throw ParseError(ParseErrorKind::missing_branch_table, "matpower: missing branch table");
    auto base = detail::find_scalar(body, "baseMVA");
    if (!base || *base <= 0.0)
        throw ParseError(ParseErrorKind::missing_base_mva, "matpower: missing baseMVA");
    auto gen_rows = detail::find_matrix(body, "gen");

    GridCase grid;
    grid.name = std::move(name);
    grid.base_mva = *base;

    std::map<int, int> ext_to_int;
    int n_slack = 0;
    for (const auto& row : *bus_rows) {
        if (row.size() < 10)
            throw ParseError(ParseErrorKind::malformed_table, "matpower: bus row too short");
        BusRecord bus;
        bus.id = static_cast<int>(row[0]);
        const int type = static_cast<int>(row[1]);
        switch (type) {
            case 1: bus.type = BusType::pq; break;
            case 2: bus.type = BusType::pv; break;
            case 3: bus.type = BusType::slack; ++n_slack; break;
            default:
                throw ParseError(ParseErrorKind::malformed_table,
                                 "matpower: unknown bus type " + std::to_string(type));
        }
        bus.Pd = row[2] / grid.base_mva;
        bus.Qd = row[3] / grid.base_mva;
        bus.Gs = row[4] / grid.base_mva;
        bus.Bs = row[5] / grid.base_mva;
        bus.base_kv = row[9];
        if (ext_to_int.count(bus.id))
            throw ParseError(ParseErrorKind::duplicate_bus_id,
                             "matpower: duplicate bus id " + std::to_string(bus.id));
        ext_to_int[bus.id] = static_cast<int>(grid.buses.size());
        grid.buses.push_back(bus);
        if (bus.type == BusType::slack) grid.slack = ext_to_int[bus.id];
    }
    if (n_slack == 0)
        throw ParseError(ParseErrorKind::missing_slack_bus, "matpower: missing slack bus");
    if (n_slack > 1)
        throw ParseError(ParseErrorKind::multiple_slack_buses, "matpower: multiple slack buses");

    auto lookup = [&](double ext, const char* what) {
        auto it = ext_to_int.find(static_cast<int>(ext));
        if (it == ext_to_int.end())
            throw ParseError(ParseErrorKind::unknown_bus_reference,
                             std::string("matpower: ") + what + " references unknown bus " +
                                 std::to_string(static_cast<int>(ext)));
        return it->second;
    };

    for (const auto& row : *branch_rows) {
        if (row.size() < 11)
            throw ParseError(ParseErrorKind::malformed_table, "matpower: branch row too short");
        if (row[10] == 0.0) continue;  // out of service
        BranchRecord br;
        br.from = lookup(row[0], "branch");
        br.to = lookup(row[1], "branch");
        if (br.from == br.to)
            throw ParseError(ParseErrorKind::malformed_table, "matpower: branch endpoints coincide");
        br.r = row[2];
        br.x = row[3];
        br.b_c = row[4];
        br.k_t = row[8] == 0.0 ? 1.0 : row[8];
        br.in_service = true;
        grid.branches.push_back(br);
    }

    if (gen_rows) {
        for (const auto& row : *gen_rows) {
            if (row.size() < 8)
                throw ParseError(ParseErrorKind::malformed_table, "matpower: gen row too short");
            if (row[7] <= 0.0) continue;  // out of service
            GenRecord g;
            g.bus = lookup(row[0], "gen");
            g.Pg = row[1] / grid.base_mva;
            g.Qg = row[2] / grid.base_mva;
            g.Vg = row[5];
            g.in_service = true;
            grid.gens.push_back(g);
        }
    }
    return grid;
}

}  // namespace gridse
