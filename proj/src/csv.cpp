#include "pate/csv.hpp"

#include "pate/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace pate {

const Vector& Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
        throw Error(ErrorKind::InvalidInput, "read_csv", "column '" + name + "' not found");
    }
    return values[static_cast<std::size_t>(it - columns.begin())];
}

bool Table::has(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, const std::string& source, std::size_t line_no) {
    const std::string cell = trim(raw);
    if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double v = 0.0;
    const char* first = cell.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw Error(ErrorKind::InvalidInput, "read_csv",
                    source + ":" + std::to_string(line_no) + ": non-numeric value '" + cell + "'");
    }
    return v;
}

}  // namespace

Table parse_csv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::InvalidInput, "read_csv", source + ": missing header row");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    Table table;
    for (auto& name : split_line(line)) table.columns.push_back(trim(name));
    const std::size_t width = table.columns.size();

    std::vector<std::vector<double>> cols(width);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != width) {
            throw Error(ErrorKind::InvalidInput, "read_csv",
                        source + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                            " fields, found " + std::to_string(cells.size()));
        }
        for (std::size_t j = 0; j < width; ++j) cols[j].push_back(parse_cell(cells[j], source, line_no));
    }
    for (auto& c : cols) table.values.push_back(Eigen::Map<Vector>(c.data(), static_cast<Index>(c.size())));
    return table;
}

Table read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidInput, "read_csv", "cannot open '" + path + "'");
    return parse_csv(in, path);
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const Table& table) {
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        out << (j ? "," : "") << table.columns[j];
    }
    out << '\n';
    for (Index i = 0; i < table.rows(); ++i) {
        for (std::size_t j = 0; j < table.columns.size(); ++j) {
            out << (j ? "," : "") << format_double(table.values[j](i));
        }
        out << '\n';
    }
}

void write_csv_file(const std::string& path, const Table& table) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::InvalidInput, "write_csv", "cannot write '" + path + "'");
    write_csv(out, table);
}

std::optional<Role> parse_role(const std::string& text) {
    if (text == "outcome") return Role::Outcome;
    if (text == "treatment") return Role::Treatment;
    if (text == "covariate") return Role::Covariate;
    if (text == "adjust-covariate") return Role::AdjustCovariate;
    if (text == "proxy") return Role::Proxy;
    if (text == "site") return Role::Site;
    if (text == "ignore") return Role::Ignore;
    return std::nullopt;
}

std::string to_string(Role role) {
    switch (role) {
    case Role::Outcome: return "outcome";
    case Role::Treatment: return "treatment";
    case Role::Covariate: return "covariate";
    case Role::AdjustCovariate: return "adjust-covariate";
    case Role::Proxy: return "proxy";
    case Role::Site: return "site";
    case Role::Ignore: return "ignore";
    }
    return "ignore";
}

Names RoleMap::columns_with(Role role) const {
    Names out;
    for (const auto& [name, r] : roles) {
        if (r == role) out.push_back(name);
    }
    return out;
}

std::optional<std::string> RoleMap::single(Role role) const {
    const auto cols = columns_with(role);
    if (cols.empty()) return std::nullopt;
    if (cols.size() > 1) {
        throw Error(ErrorKind::InvalidInput, "role_map", "more than one column has role " + to_string(role));
    }
    return cols.front();
}

Names ordered_columns(const Table& table, const RoleMap& roles, Role role) {
    const Names wanted = roles.columns_with(role);
    Names out;
    for (const auto& c : table.columns) {
        if (std::find(wanted.begin(), wanted.end(), c) != wanted.end()) out.push_back(c);
    }
    for (const auto& w : wanted) {
        if (!table.has(w)) {
            throw Error(ErrorKind::InvalidInput, "role_map", to_string(role) + " column '" + w + "' not found");
        }
    }
    return out;
}

namespace {

Matrix gather(const Table& table, const Names& names) {
    Matrix m(table.rows(), static_cast<Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) m.col(static_cast<Index>(j)) = table.column(names[j]);
    return m;
}

std::string required(const RoleMap& roles, Role role) {
    const auto name = roles.single(role);
    if (!name) {
        throw Error(ErrorKind::InvalidInput, "role_map", "no column has role " + to_string(role));
    }
    return *name;
}

}  // namespace

ExperimentalSample experimental_from_table(const Table& table, const RoleMap& roles) {
    const std::string outcome = required(roles, Role::Outcome);
    const std::string treatment = required(roles, Role::Treatment);
    for (const auto& c : {outcome, treatment}) {
        if (!table.has(c)) {
            throw Error(ErrorKind::InvalidInput, "experimental_from_table",
                        (c == treatment ? "treatment" : "outcome") + std::string(" column '") + c +
                            "' not found in experimental data");
        }
    }
    const Names covs = ordered_columns(table, roles, Role::Covariate);
    Names adjust = roles.adjust_columns;
    if (adjust.empty()) {
        adjust = covs;
        for (const auto& a : ordered_columns(table, roles, Role::AdjustCovariate)) adjust.push_back(a);
    }
    return make_experimental(covs, gather(table, covs), table.column(treatment), table.column(outcome), adjust,
                             gather(table, adjust));
}

PopulationSample population_from_table(const Table& table, const RoleMap& roles, const Names& covariate_names) {
    PopulationSample pop;
    const std::string outcome = roles.population_outcome.value_or(required(roles, Role::Outcome));
    if (!table.has(outcome)) {
        throw Error(ErrorKind::InvalidInput, "population_from_table",
                    "outcome column '" + outcome + "' not found in population data");
    }
    Names present;
    for (const auto& c : covariate_names) {
        if (table.has(c)) present.push_back(c);
    }
    // Missing covariates are left for validate_pair to report by name.
    pop.covariate_names = present;
    pop.covariates = gather(table, present);
    pop.outcome = table.column(outcome);
    pop.outcome_kind = roles.outcome_kind;
    if (const auto t = roles.single(Role::Treatment); t && table.has(*t)) pop.treatment = table.column(*t);
    return pop;
}

std::optional<Vector> experimental_proxy(const Table& table, const RoleMap& roles) {
    const auto name = roles.single(Role::Proxy);
    if (!name) return std::nullopt;
    return table.column(*name);
}

}  // namespace pate
