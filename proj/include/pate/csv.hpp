#pragma once

#include "pate/data.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pate {

/// A numeric CSV table held column-wise. Empty cells and "NA" parse as NaN so
/// that validation can report them.
struct Table {
    Names columns;
    std::vector<Vector> values;

    Index rows() const { return values.empty() ? 0 : values.front().size(); }
    const Vector& column(const std::string& name) const;
    bool has(const std::string& name) const;
};

Table parse_csv(std::istream& in, const std::string& source = "<stream>");
Table read_csv(const std::string& path);
void write_csv(std::ostream& out, const Table& table);
void write_csv_file(const std::string& path, const Table& table);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

enum class Role { Outcome, Treatment, Covariate, AdjustCovariate, Proxy, Site, Ignore };

std::optional<Role> parse_role(const std::string& text);
std::string to_string(Role role);

/// Assigns CSV columns to roles. Columns absent from the map are ignored.
struct RoleMap {
    std::vector<std::pair<std::string, Role>> roles;  // insertion order kept for output
    Names adjust_columns;  // explicit X~; empty means covariates + adjust-covariate columns
    std::optional<std::string> population_outcome;  // column holding Y (or proxy) in the population file
    OutcomeKind outcome_kind = OutcomeKind::SameMeasure;

    Names columns_with(Role role) const;
    std::optional<std::string> single(Role role) const;
};

/// Builds the experimental sample; covariates follow the file's column order.
ExperimentalSample experimental_from_table(const Table& table, const RoleMap& roles);

/// Builds the population sample with covariates ordered as `covariate_names`.
PopulationSample population_from_table(const Table& table, const RoleMap& roles, const Names& covariate_names);

/// Proxy column measured on the experimental units, when the role map names one.
std::optional<Vector> experimental_proxy(const Table& table, const RoleMap& roles);

/// Column order of the experimental file restricted to one role.
Names ordered_columns(const Table& table, const RoleMap& roles, Role role);

}  // namespace pate
