#include "camdp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace camdp {

namespace {

const Json& field(const Json& j, const char* key) {
    if (!j.is_object()) throw FormatError("instance JSON must be an object");
    auto it = j.find(key);
    if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
    return *it;
}

double number(const Json& v, const std::string& where) {
    if (!v.is_number()) throw FormatError("expected a number at " + where);
    return v.get<double>();
}

MatrixXd table_from(const Json& v, Index S, Index A, const char* name) {
    if (!v.is_array() || static_cast<Index>(v.size()) != S)
        throw FormatError(std::string("'") + name + "' must be an S x A array");
    MatrixXd t(S, A);
    for (Index s = 0; s < S; ++s) {
        const Json& row = v[s];
        if (!row.is_array() || static_cast<Index>(row.size()) != A)
            throw FormatError(std::string("'") + name + "' row " + std::to_string(s) + " must have A entries");
        for (Index a = 0; a < A; ++a)
            t(s, a) = number(row[a], std::string(name) + "[" + std::to_string(s) + "][" + std::to_string(a) + "]");
    }
    return t;
}

Json table_to(const MatrixXd& t) {
    Json out = Json::array();
    for (Index s = 0; s < t.rows(); ++s) {
        Json row = Json::array();
        for (Index a = 0; a < t.cols(); ++a) row.push_back(t(s, a));
        out.push_back(row);
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

Json instance_to_json(const Cmdp& m) {
    Json j;
    j["n_states"] = m.n_states;
    j["n_actions"] = m.n_actions;
    Json k = Json::array();
    for (Index s = 0; s < m.n_states; ++s) {
        Json per_a = Json::array();
        for (Index a = 0; a < m.n_actions; ++a) {
            Json row = Json::array();
            for (Index t = 0; t < m.n_states; ++t) row.push_back(m.kernel(m.row(s, a), t));
            per_a.push_back(row);
        }
        k.push_back(per_a);
    }
    j["kernel"] = k;
    j["reward"] = table_to(m.reward);
    j["constraint"] = table_to(m.constraint);
    j["threshold"] = m.threshold;
    Json st = Json::array();
    for (Index s = 0; s < m.n_states; ++s) st.push_back(m.start(s));
    j["start"] = st;
    return j;
}

Cmdp instance_from_json(const Json& j) {
    const Json& ns = field(j, "n_states");
    const Json& na = field(j, "n_actions");
    if (!ns.is_number_integer() || !na.is_number_integer()) throw FormatError("n_states and n_actions must be integers");
    const Index S = ns.get<Index>(), A = na.get<Index>();
    if (S <= 0 || A <= 0) throw FormatError("n_states and n_actions must be positive");
    Cmdp m = Cmdp::zeros(S, A);
    const Json& k = field(j, "kernel");
    if (!k.is_array() || static_cast<Index>(k.size()) != S) throw FormatError("'kernel' must be S x A x S");
    for (Index s = 0; s < S; ++s) {
        if (!k[s].is_array() || static_cast<Index>(k[s].size()) != A) throw FormatError("'kernel' must be S x A x S");
        for (Index a = 0; a < A; ++a) {
            const Json& row = k[s][a];
            if (!row.is_array() || static_cast<Index>(row.size()) != S) throw FormatError("'kernel' must be S x A x S");
            for (Index t = 0; t < S; ++t)
                m.kernel(m.row(s, a), t) = number(row[t], "kernel[" + std::to_string(s) + "][" + std::to_string(a) +
                                                              "][" + std::to_string(t) + "]");
        }
    }
    m.reward = table_from(field(j, "reward"), S, A, "reward");
    m.constraint = table_from(field(j, "constraint"), S, A, "constraint");
    m.threshold = number(field(j, "threshold"), "threshold");
    const Json& st = field(j, "start");
    if (!st.is_array() || static_cast<Index>(st.size()) != S) throw FormatError("'start' must have S entries");
    for (Index s = 0; s < S; ++s) m.start(s) = number(st[s], "start[" + std::to_string(s) + "]");
    validate(m);
    return m;
}

Cmdp read_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open instance file '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw FormatError("malformed JSON in '" + path + "': " + e.what());
    }
    return instance_from_json(j);
}

void write_instance(const std::string& path, const Cmdp& m) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write '" + path + "'");
    out << instance_to_json(m).dump(2) << '\n';
}

Json empirical_to_json(const EmpiricalModel& e, const Cmdp& base) {
    Json j = instance_to_json(e.as_instance(base));
    Json counts = Json::array();
    for (Index s = 0; s < base.n_states; ++s) {
        Json per_a = Json::array();
        for (Index a = 0; a < base.n_actions; ++a) {
            Json row = Json::array();
            for (Index t = 0; t < base.n_states; ++t) row.push_back(e.counts(base.row(s, a), t));
            per_a.push_back(row);
        }
        counts.push_back(per_a);
    }
    j["counts"] = counts;
    j["samples_per_pair"] = e.samples_per_pair;
    j["seed"] = e.seed;
    return j;
}

Json solution_to_json(const OccupancySolution<double>& sol) {
    Json j;
    j["status"] = to_string(sol.status);
    if (sol.status == LpStatus::optimal) {
        j["mu"] = table_to(sol.mu);
        j["objective"] = sol.objective;
        j["constraint_value"] = sol.constraint_value;
        j["lambda"] = sol.dual_lambda;
    }
    return j;
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig c;
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("config line " + std::to_string(n) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw FormatError("config line " + std::to_string(n) + ": empty key");
        if (c.values_.count(key)) throw FormatError("config line " + std::to_string(n) + ": duplicate key '" + key + "'");
        c.values_[key] = trim(line.substr(eq + 1));
    }
    return c;
}

KeyValueConfig KeyValueConfig::read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string KeyValueConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw FormatError("missing config key '" + key + "'");
    return it->second;
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::vector<std::string> KeyValueConfig::list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream in(get(key));
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) throw FormatError("empty list element in '" + key + "'");
        out.push_back(item);
    }
    if (out.empty()) throw FormatError("list '" + key + "' is empty");
    return out;
}

std::vector<double> KeyValueConfig::doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : list(key)) out.push_back(parse_double(s, key));
    return out;
}

std::vector<std::int64_t> KeyValueConfig::ints(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& s : list(key)) out.push_back(parse_int(s, key));
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw FormatError("");
        return v;
    } catch (const std::exception&) {
        throw FormatError("'" + what + "' expects a number, got '" + s + "'");
    }
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return v;
    // Integral values in floating notation such as 1e5 are accepted.
    const double d = parse_double(s, what);
    if (d != std::floor(d) || std::abs(d) > 9e18) throw FormatError("'" + what + "' expects an integer, got '" + s + "'");
    return static_cast<std::int64_t>(d);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace camdp
