#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "camdp/generative.hpp"
#include "camdp/oracle.hpp"
#include "camdp/types.hpp"

namespace camdp {

using Json = nlohmann::json;

/// Instance schema: n_states, n_actions, kernel (S x A x S), reward, constraint (S x A), threshold, start.
Json instance_to_json(const Cmdp& m);
/// Throws FormatError on schema problems and ArgumentError on invariant violations.
Cmdp instance_from_json(const Json& j);

Cmdp read_instance(const std::string& path);
void write_instance(const std::string& path, const Cmdp& m);

/// Instance schema with the estimated kernel; adds the raw counts and sampling settings.
Json empirical_to_json(const EmpiricalModel& e, const Cmdp& base);

/// mu, objective, lambda, status, constraint_value.
Json solution_to_json(const OccupancySolution<double>& sol);

/// Flat `key = value` text; `#` starts a comment; list values are comma separated.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig read(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback) const;
    std::vector<std::string> list(const std::string& key) const;
    std::vector<double> doubles(const std::string& key) const;
    std::vector<std::int64_t> ints(const std::string& key) const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Strict numeric parsing; throws FormatError naming the field.
double parse_double(const std::string& s, const std::string& what);
std::int64_t parse_int(const std::string& s, const std::string& what);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

} // namespace camdp
