#include "gesdispatch/scenario_io.hpp"

#include "gesdispatch/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ges {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& text, const std::string& context) {
    std::string t = text;
    t.erase(0, t.find_first_not_of(" \t"));
    t.erase(t.find_last_not_of(" \t\r") + 1);
    if (t == "inf" || t == "+inf") return kUnbounded;
    if (t == "-inf") return -kUnbounded;
    try {
        std::size_t pos = 0;
        const double v = std::stod(t, &pos);
        if (pos == t.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::ParseError, context + ": cannot parse number '" + text + "'");
}

std::ptrdiff_t CsvTable::column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == name) return static_cast<std::ptrdiff_t>(c);
    return -1;
}

const std::string& CsvTable::cell(std::size_t row, const std::string& name) const {
    static const std::string empty;
    const auto c = column(name);
    if (c < 0 || static_cast<std::size_t>(c) >= rows[row].size()) return empty;
    return rows[row][static_cast<std::size_t>(c)];
}

std::string CsvTable::where(std::size_t row, const std::string& name) const {
    return file + ":" + std::to_string(lines[row]) + ": column " + name;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char ch = line[k];
        if (quoted) {
            if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                cur += '"';
                ++k;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = was_quoted = true;
        } else if (ch == ',') {
            if (!was_quoted) {
                cur.erase(0, cur.find_first_not_of(" \t"));
                cur.erase(cur.find_last_not_of(" \t") + 1);
            }
            out.push_back(cur);
            cur.clear();
            was_quoted = false;
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    if (!was_quoted) {
        cur.erase(0, cur.find_first_not_of(" \t"));
        cur.erase(cur.find_last_not_of(" \t") + 1);
    }
    out.push_back(cur);
    return out;
}

std::string quote(const std::string& cell) {
    if (cell.find_first_of(",\"") == std::string::npos) return cell;
    std::string q = "\"";
    for (char ch : cell) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

} // namespace

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string());
    CsvTable t;
    t.file = path.filename().string();
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (t.header.empty()) {
            t.header = split(line);
            continue;
        }
        auto cells = split(line);
        if (cells.size() != t.header.size())
            throw Error(ErrorKind::ParseError, t.file + ":" + std::to_string(n) + ": expected " +
                                                   std::to_string(t.header.size()) + " cells, found " +
                                                   std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
        t.lines.push_back(n);
    }
    if (t.header.empty()) throw Error(ErrorKind::ParseError, t.file + ": missing header row");
    return t;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    auto put = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (cells[c].find_first_of("\n\r") != std::string::npos)
                throw Error(ErrorKind::InvalidSpec, "value '" + cells[c] + "' cannot be stored in " + path.filename().string());
            out << (c ? "," : "") << quote(cells[c]);
        }
        out << '\n';
    };
    put(header);
    for (const auto& r : rows) put(r);
}

namespace {

// ---------------------------------------------------------------------------
// Column catalogs

const std::vector<std::string> kThermalScalars = {"R", "C", "cop", "temp_min", "temp_max", "p_min", "p_max"};
const std::vector<std::string> kStorageScalars = {"capacity",  "eta_c",     "eta_d",   "self_discharge",
                                                  "p_c_rated", "p_d_rated", "soc_init"};
const std::vector<std::string> kThermalSeries = {"comfort_lo", "comfort_hi", "outdoor_temp", "baseline_power"};
const std::vector<std::string> kStorageSeries = {"soc_lo",          "soc_hi",        "baseline_charge",
                                                 "baseline_discharge", "baseline_dsoc", "baseline_soc"};
const std::vector<std::string> kUnitSeries = {"on_prob", "price_c", "price_d"};

double& thermal_field(ThermalParams& p, const std::string& k) {
    if (k == "R") return p.resistance;
    if (k == "C") return p.capacitance;
    if (k == "cop") return p.cop;
    if (k == "temp_min") return p.temp_min;
    if (k == "temp_max") return p.temp_max;
    if (k == "p_min") return p.p_min;
    return p.p_max;
}

double& storage_field(StorageParams& p, const std::string& k) {
    if (k == "capacity") return p.capacity;
    if (k == "eta_c") return p.eta_c;
    if (k == "eta_d") return p.eta_d;
    if (k == "self_discharge") return p.self_discharge;
    if (k == "p_c_rated") return p.p_c_rated;
    if (k == "p_d_rated") return p.p_d_rated;
    return p.soc_init;
}

Series& thermal_series(ThermalParams& p, const std::string& k) {
    if (k == "comfort_lo") return p.comfort_lo;
    if (k == "comfort_hi") return p.comfort_hi;
    if (k == "outdoor_temp") return p.outdoor_temp;
    return p.baseline_power;
}

Series& storage_series(StorageParams& p, const std::string& k) {
    if (k == "soc_lo") return p.soc_lo;
    if (k == "soc_hi") return p.soc_hi;
    if (k == "baseline_charge") return p.baseline_charge;
    if (k == "baseline_discharge") return p.baseline_discharge;
    if (k == "baseline_dsoc") return p.baseline_dsoc;
    return p.baseline_soc;
}

Series& unit_series(UnitModel& u, const std::string& k) {
    if (k == "on_prob") return u.device.on_prob;
    if (k == "price_c") return u.price_c;
    return u.price_d;
}

json number_or_null(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

double number_or_inf(const json& j, const std::string& key, double def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (v.is_null()) return kUnbounded;
    if (!v.is_number()) throw Error(ErrorKind::ParseError, "scenario.json: '" + key + "' must be a number or null");
    return v.get<double>();
}

double required_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw Error(ErrorKind::ParseError, where + ": '" + key + "' must be a number");
    return j.at(key).get<double>();
}

std::string cell_number(double v) { return format_number(v); }

// Collects per-step values of a long-format table into contiguous series.
class SeriesCollector {
public:
    void put(const std::string& key, std::size_t t, double v, const std::string& where) {
        auto& s = values_[key];
        if (s.size() <= t) s.resize(t + 1);
        if (s[t]) throw Error(ErrorKind::ParseError, where + ": duplicate step " + std::to_string(t));
        s[t] = v;
    }
    Series take(const std::string& key, const std::string& context) const {
        Series out;
        auto it = values_.find(key);
        if (it == values_.end()) return out;
        for (std::size_t t = 0; t < it->second.size(); ++t) {
            if (!it->second[t])
                throw Error(ErrorKind::ParseError, context + ": missing step " + std::to_string(t) + " of " + key);
            out.push_back(*it->second[t]);
        }
        return out;
    }

private:
    std::map<std::string, std::vector<std::optional<double>>> values_;
};

std::size_t parse_step(const CsvTable& tab, std::size_t r) {
    const std::string& s = tab.cell(r, "t");
    const double v = parse_double(s, tab.where(r, "t"));
    if (!(v >= 0) || v != std::floor(v) || v > 1e6)
        throw Error(ErrorKind::ParseError, tab.where(r, "t") + ": step must be a nonnegative integer");
    return static_cast<std::size_t>(v);
}

} // namespace

ScenarioBundle read_scenario(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorKind::ParseError, "scenario directory " + dir.string() + " not found");
    ScenarioBundle s;

    // scenario.json
    json j;
    {
        std::ifstream in(dir / "scenario.json");
        if (!in) throw Error(ErrorKind::ParseError, "cannot open " + (dir / "scenario.json").string());
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::ParseError, std::string("scenario.json: ") + e.what());
        }
    }
    try {
        s.name = j.value("name", std::string());
        s.horizon = static_cast<std::size_t>(required_number(j, "horizon", "scenario.json"));
        s.dt = required_number(j, "dt", "scenario.json");
        s.grid_cap = number_or_inf(j, "grid_cap", kUnbounded);
        s.gamma = required_number(j, "gamma", "scenario.json");
        if (j.contains("gamma_balance") && !j.at("gamma_balance").is_null())
            s.gamma_balance = required_number(j, "gamma_balance", "scenario.json");
        if (j.contains("dispatch_window"))
            s.dispatch_window = j.at("dispatch_window").get<std::vector<std::size_t>>();
        s.mode = parse_model_mode(j.value("mode", std::string("M3")));
        s.shape = parse_shape_class(j.value("shape", std::string("unimodal")));
        if (j.contains("res_names")) s.res_names = j.at("res_names").get<std::vector<std::string>>();
        if (j.contains("reserve")) {
            const json& r = j.at("reserve");
            s.reserve.mode = parse_reserve_mode(r.value("mode", std::string("none")));
            s.reserve.lower = r.contains("lower") ? required_number(r, "lower", "scenario.json reserve") : 0.0;
            s.reserve.upper = r.contains("upper") ? required_number(r, "upper", "scenario.json reserve") : 0.0;
            s.reserve.ramp_up = number_or_inf(r, "ramp_up", kUnbounded);
            s.reserve.ramp_dn = number_or_inf(r, "ramp_dn", kUnbounded);
            s.reserve.a = r.contains("a") ? required_number(r, "a", "scenario.json reserve") : 1.0;
            s.reserve.b = r.contains("b") ? required_number(r, "b", "scenario.json reserve") : 2.0;
            if (r.contains("s1_price") && !r.at("s1_price").is_null())
                s.reserve.s1_price = required_number(r, "s1_price", "scenario.json reserve");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("scenario.json: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ParseError) throw;
        throw Error(ErrorKind::ParseError, std::string("scenario.json: ") + e.what());
    }

    // units.csv
    const CsvTable units = read_csv(dir / "units.csv");
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < units.rows.size(); ++r) {
        UnitModel u;
        u.device.unit_id = units.cell(r, "unit_id");
        if (u.device.unit_id.empty()) throw Error(ErrorKind::ParseError, units.where(r, "unit_id") + ": empty unit id");
        if (!index.emplace(u.device.unit_id, r).second)
            throw Error(ErrorKind::ParseError, units.where(r, "unit_id") + ": duplicate unit " + u.device.unit_id);
        try {
            u.device.kind = device_kind_from_string(units.cell(r, "kind"));
        } catch (const Error&) {
            throw Error(ErrorKind::ParseError, units.where(r, "kind") + ": unknown device kind '" + units.cell(r, "kind") + "'");
        }
        auto num = [&](const std::string& col, double def) {
            const std::string& c = units.cell(r, col);
            return c.empty() ? def : parse_double(c, units.where(r, col));
        };
        u.device.soc_phys_lo = num("soc_phys_lo", 0.0);
        u.device.soc_phys_hi = num("soc_phys_hi", 1.0);
        u.device.soc_ramp_up = num("soc_ramp_up", kUnbounded);
        u.device.soc_ramp_dn = num("soc_ramp_dn", kUnbounded);
        if (!units.cell(r, "reserve_upper").empty()) u.reserve_upper = num("reserve_upper", 0.0);
        if (is_tcl(u.device.kind)) {
            ThermalParams p;
            for (const auto& k : kThermalScalars) thermal_field(p, k) = num(k, 0.0);
            p.deadband = num("deadband", 0.0);
            if (!units.cell(r, "initial_temp").empty()) p.initial_temp = num("initial_temp", 0.0);
            u.device.physics = p;
        } else {
            StorageParams p;
            for (const auto& k : kStorageScalars) storage_field(p, k) = num(k, k == "soc_init" ? 0.5 : 0.0);
            if (units.cell(r, "eta_c").empty()) p.eta_c = 1.0;
            if (units.cell(r, "eta_d").empty()) p.eta_d = 1.0;
            p.deadband = num("deadband", 0.0);
            u.device.physics = p;
        }
        for (std::size_t c = 0; c < units.header.size(); ++c) {
            const std::string& h = units.header[c];
            if (h.rfind("unc:", 0) != 0 || units.rows[r][c].empty()) continue;
            try {
                u.uncertainty.params[h.substr(4)] = parse_distribution(units.rows[r][c]);
            } catch (const Error& e) {
                throw Error(ErrorKind::ParseError, units.where(r, h) + ": " + e.what());
            }
        }
        s.units.push_back(std::move(u));
    }

    // unit_series.csv
    const fs::path series_path = dir / "unit_series.csv";
    if (fs::exists(series_path)) {
        const CsvTable tab = read_csv(series_path);
        std::vector<SeriesCollector> col(s.units.size());
        std::vector<std::map<std::size_t, DistributionSpec>> baseline(s.units.size());
        for (std::size_t r = 0; r < tab.rows.size(); ++r) {
            const std::string& id = tab.cell(r, "unit_id");
            auto it = index.find(id);
            if (it == index.end()) throw Error(ErrorKind::ParseError, tab.where(r, "unit_id") + ": unknown unit '" + id + "'");
            const std::size_t t = parse_step(tab, r);
            for (std::size_t c = 0; c < tab.header.size(); ++c) {
                const std::string& h = tab.header[c];
                const std::string& v = tab.rows[r][c];
                if (h == "unit_id" || h == "t" || v.empty()) continue;
                if (h == "baseline_dist") {
                    try {
                        if (!baseline[it->second].emplace(t, parse_distribution(v)).second)
                            throw Error(ErrorKind::ParseError, "duplicate step");
                    } catch (const Error& e) {
                        throw Error(ErrorKind::ParseError, tab.where(r, h) + ": " + e.what());
                    }
                    continue;
                }
                col[it->second].put(h, t, parse_double(v, tab.where(r, h)), tab.where(r, h));
            }
        }
        for (std::size_t i = 0; i < s.units.size(); ++i) {
            UnitModel& u = s.units[i];
            const std::string ctx = "unit_series.csv: unit " + u.device.unit_id;
            if (auto* p = std::get_if<ThermalParams>(&u.device.physics))
                for (const auto& k : kThermalSeries) thermal_series(*p, k) = col[i].take(k, ctx);
            if (auto* p = std::get_if<StorageParams>(&u.device.physics))
                for (const auto& k : kStorageSeries) storage_series(*p, k) = col[i].take(k, ctx);
            for (const auto& k : kUnitSeries) unit_series(u, k) = col[i].take(k, ctx);
            std::size_t t = 0;
            for (const auto& [step, d] : baseline[i]) {
                if (step != t++) throw Error(ErrorKind::ParseError, ctx + ": missing baseline_dist step " + std::to_string(t - 1));
                u.uncertainty.baseline.push_back(d);
            }
        }
    }

    // ddu.csv
    const CsvTable ddu = read_csv(dir / "ddu.csv");
    std::set<std::string> seen;
    for (std::size_t r = 0; r < ddu.rows.size(); ++r) {
        const std::string& id = ddu.cell(r, "unit_id");
        auto it = index.find(id);
        if (it == index.end()) throw Error(ErrorKind::ParseError, ddu.where(r, "unit_id") + ": unknown unit '" + id + "'");
        if (!seen.insert(id).second) throw Error(ErrorKind::ParseError, ddu.where(r, "unit_id") + ": duplicate unit " + id);
        DduSpec d;
        auto num = [&](const std::string& col, double def) {
            const std::string& c = ddu.cell(r, col);
            return c.empty() ? def : parse_double(c, ddu.where(r, col));
        };
        d.sigma_g = num("sigma_g", d.sigma_g);
        d.sigma_h = num("sigma_h", d.sigma_h);
        d.beta_up = num("beta_up", d.beta_up);
        d.beta_lo = num("beta_lo", d.beta_lo);
        d.lambda = num("lambda", d.lambda);
        d.c_bar = num("c_bar", d.c_bar);
        d.beta_cap = num("beta_cap", d.beta_cap);
        if (!ddu.cell(r, "q_g_level").empty()) d.q_g_level = num("q_g_level", 0.5);
        try {
            if (!ddu.cell(r, "h_family").empty()) d.h_family = parse_h_family(ddu.cell(r, "h_family"));
            if (!ddu.cell(r, "variant").empty()) d.variant = parse_discomfort_variant(ddu.cell(r, "variant"));
        } catch (const Error& e) {
            throw Error(ErrorKind::ParseError, ddu.file + ":" + std::to_string(ddu.lines[r]) + ": " + e.what());
        }
        s.units[it->second].ddu = d;
    }
    for (const auto& u : s.units)
        if (!seen.count(u.device.unit_id))
            throw Error(ErrorKind::ParseError, "ddu.csv: no row for unit " + u.device.unit_id);

    // timeseries.csv
    const CsvTable ts = read_csv(dir / "timeseries.csv");
    SeriesCollector tou;
    std::map<std::string, std::map<std::size_t, DistributionSpec>> dists;
    for (std::size_t r = 0; r < ts.rows.size(); ++r) {
        const std::size_t t = parse_step(ts, r);
        for (std::size_t c = 0; c < ts.header.size(); ++c) {
            const std::string& h = ts.header[c];
            const std::string& v = ts.rows[r][c];
            if (h == "t" || v.empty()) continue;
            if (h == "tou_price") {
                tou.put(h, t, parse_double(v, ts.where(r, h)), ts.where(r, h));
                continue;
            }
            if (h != "load" && h.rfind("res:", 0) != 0)
                throw Error(ErrorKind::ParseError, ts.where(r, h) + ": unknown column");
            try {
                if (!dists[h].emplace(t, parse_distribution(v)).second) throw Error(ErrorKind::ParseError, "duplicate step");
            } catch (const Error& e) {
                throw Error(ErrorKind::ParseError, ts.where(r, h) + ": " + e.what());
            }
        }
    }
    s.tou_price = tou.take("tou_price", "timeseries.csv");
    auto take_dist = [&](const std::string& key) {
        std::vector<DistributionSpec> out;
        std::size_t t = 0;
        for (const auto& [step, d] : dists[key]) {
            if (step != t++) throw Error(ErrorKind::ParseError, "timeseries.csv: missing step " + std::to_string(t - 1) + " of " + key);
            out.push_back(d);
        }
        return out;
    };
    s.load = take_dist("load");
    for (const auto& name : s.res_names) s.res.push_back(take_dist("res:" + name));
    for (const auto& [key, _] : dists)
        if (key.rfind("res:", 0) == 0 &&
            std::find(s.res_names.begin(), s.res_names.end(), key.substr(4)) == s.res_names.end())
            throw Error(ErrorKind::ParseError, "timeseries.csv: column " + key + " is not listed in res_names");
    return s;
}

ScenarioBundle load_scenario(const fs::path& dir) {
    ScenarioBundle s = read_scenario(dir);
    require_valid(s);
    return s;
}

void save_scenario(const ScenarioBundle& s, const fs::path& dir) {
    fs::create_directories(dir);
    json j;
    j["name"] = s.name;
    j["horizon"] = s.horizon;
    j["dt"] = s.dt;
    j["grid_cap"] = number_or_null(s.grid_cap);
    j["gamma"] = s.gamma;
    j["gamma_balance"] = s.gamma_balance ? json(*s.gamma_balance) : json(nullptr);
    j["dispatch_window"] = s.dispatch_window;
    j["mode"] = to_string(s.mode);
    j["shape"] = to_string(s.shape);
    j["res_names"] = s.res_names;
    json r;
    r["mode"] = to_string(s.reserve.mode);
    r["lower"] = s.reserve.lower;
    r["upper"] = s.reserve.upper;
    r["ramp_up"] = number_or_null(s.reserve.ramp_up);
    r["ramp_dn"] = number_or_null(s.reserve.ramp_dn);
    r["a"] = s.reserve.a;
    r["b"] = s.reserve.b;
    r["s1_price"] = s.reserve.s1_price ? json(*s.reserve.s1_price) : json(nullptr);
    j["reserve"] = r;
    {
        std::ofstream out(dir / "scenario.json");
        if (!out) throw Error(ErrorKind::IoError, "cannot write " + (dir / "scenario.json").string());
        out << j.dump(2) << '\n';
    }

    // units.csv
    std::set<std::string> unc_keys;
    for (const auto& u : s.units)
        for (const auto& [k, _] : u.uncertainty.params) unc_keys.insert(k);
    std::vector<std::string> header = {"unit_id", "kind", "soc_phys_lo", "soc_phys_hi", "soc_ramp_up", "soc_ramp_dn",
                                       "reserve_upper"};
    for (const auto& k : kThermalScalars) header.push_back(k);
    header.push_back("initial_temp");
    for (const auto& k : kStorageScalars) header.push_back(k);
    header.push_back("deadband");
    for (const auto& k : unc_keys) header.push_back("unc:" + k);
    std::vector<std::vector<std::string>> rows;
    for (const auto& u : s.units) {
        std::map<std::string, std::string> c;
        c["unit_id"] = u.device.unit_id;
        c["kind"] = to_string(u.device.kind);
        c["soc_phys_lo"] = cell_number(u.device.soc_phys_lo);
        c["soc_phys_hi"] = cell_number(u.device.soc_phys_hi);
        c["soc_ramp_up"] = cell_number(u.device.soc_ramp_up);
        c["soc_ramp_dn"] = cell_number(u.device.soc_ramp_dn);
        if (u.reserve_upper) c["reserve_upper"] = cell_number(*u.reserve_upper);
        if (const auto* p = std::get_if<ThermalParams>(&u.device.physics)) {
            ThermalParams q = *p;
            for (const auto& k : kThermalScalars) c[k] = cell_number(thermal_field(q, k));
            if (p->initial_temp) c["initial_temp"] = cell_number(*p->initial_temp);
            c["deadband"] = cell_number(p->deadband);
        } else {
            StorageParams q = std::get<StorageParams>(u.device.physics);
            for (const auto& k : kStorageScalars) c[k] = cell_number(storage_field(q, k));
            c["deadband"] = cell_number(q.deadband);
        }
        for (const auto& [k, d] : u.uncertainty.params) c["unc:" + k] = format_distribution(d);
        std::vector<std::string> row;
        for (const auto& h : header) row.push_back(c.count(h) ? c[h] : "");
        rows.push_back(std::move(row));
    }
    write_csv(dir / "units.csv", header, rows);

    // unit_series.csv
    header = {"unit_id", "t"};
    for (const auto& k : kThermalSeries) header.push_back(k);
    for (const auto& k : kStorageSeries) header.push_back(k);
    for (const auto& k : kUnitSeries) header.push_back(k);
    header.push_back("baseline_dist");
    rows.clear();
    for (const auto& u : s.units) {
        std::map<std::string, const Series*> series;
        UnitModel copy = u;
        if (auto* p = std::get_if<ThermalParams>(&copy.device.physics))
            for (const auto& k : kThermalSeries) series[k] = &thermal_series(*p, k);
        if (auto* p = std::get_if<StorageParams>(&copy.device.physics))
            for (const auto& k : kStorageSeries) series[k] = &storage_series(*p, k);
        for (const auto& k : kUnitSeries) series[k] = &unit_series(copy, k);
        std::size_t len = u.uncertainty.baseline.size();
        for (const auto& [_, v] : series) len = std::max(len, v->size());
        for (std::size_t t = 0; t < len; ++t) {
            std::vector<std::string> row;
            for (const auto& h : header) {
                if (h == "unit_id") row.push_back(u.device.unit_id);
                else if (h == "t") row.push_back(std::to_string(t));
                else if (h == "baseline_dist")
                    row.push_back(t < u.uncertainty.baseline.size() ? format_distribution(u.uncertainty.baseline[t]) : "");
                else {
                    auto it = series.find(h);
                    row.push_back(it != series.end() && t < it->second->size() ? cell_number((*it->second)[t]) : "");
                }
            }
            rows.push_back(std::move(row));
        }
    }
    write_csv(dir / "unit_series.csv", header, rows);

    // ddu.csv
    header = {"unit_id", "sigma_g", "sigma_h", "beta_up", "beta_lo", "lambda", "c_bar", "q_g_level", "h_family",
              "variant", "beta_cap"};
    rows.clear();
    for (const auto& u : s.units) {
        const DduSpec& d = u.ddu;
        rows.push_back({u.device.unit_id, cell_number(d.sigma_g), cell_number(d.sigma_h), cell_number(d.beta_up),
                        cell_number(d.beta_lo), cell_number(d.lambda), cell_number(d.c_bar),
                        d.q_g_level ? cell_number(*d.q_g_level) : "", to_string(d.h_family), to_string(d.variant),
                        cell_number(d.beta_cap)});
    }
    write_csv(dir / "ddu.csv", header, rows);

    // timeseries.csv
    header = {"t", "tou_price", "load"};
    for (const auto& n : s.res_names) header.push_back("res:" + n);
    rows.clear();
    std::size_t len = std::max(s.tou_price.size(), s.load.size());
    for (const auto& r : s.res) len = std::max(len, r.size());
    for (std::size_t t = 0; t < len; ++t) {
        std::vector<std::string> row = {std::to_string(t), t < s.tou_price.size() ? cell_number(s.tou_price[t]) : "",
                                        t < s.load.size() ? format_distribution(s.load[t]) : ""};
        for (std::size_t k = 0; k < s.res_names.size(); ++k)
            row.push_back(k < s.res.size() && t < s.res[k].size() ? format_distribution(s.res[k][t]) : "");
        rows.push_back(std::move(row));
    }
    write_csv(dir / "timeseries.csv", header, rows);
}

} // namespace ges
