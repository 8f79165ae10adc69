#include "topoderiv/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace topoderiv {

namespace {

struct Entry {
    std::string section;
    std::string key;
    std::string value;
    int line;
    bool used = false;
};

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

class ConfigReader {
public:
    ConfigReader(const std::string& text, const std::string& name) : name_(name) {
        static const char* known_sections[] = {"domain",       "phases", "boundary",
                                               "cost",         "perturbation", "numerics"};
        std::istringstream is(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const std::size_t hash = line.find_first_of("#;");
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') fail(lineno, "unterminated section header");
                section = lower(trim(line.substr(1, line.size() - 2)));
                if (std::find_if(std::begin(known_sections), std::end(known_sections),
                                 [&](const char* k) { return section == k; }) ==
                    std::end(known_sections))
                    fail(lineno, "unknown section [" + section + "]");
                seen_sections_.push_back(section);
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) fail(lineno, "expected 'key = value'");
            if (section.empty()) fail(lineno, "key outside of any [section]");
            Entry e;
            e.section = section;
            e.key = lower(trim(line.substr(0, eq)));
            e.value = trim(line.substr(eq + 1));
            e.line = lineno;
            entries_.push_back(e);
        }
    }

    bool has_section(const std::string& s) const {
        return std::find(seen_sections_.begin(), seen_sections_.end(), s) != seen_sections_.end();
    }

    Entry* find(const std::string& section, const std::string& key) {
        for (auto& e : entries_)
            if (e.section == section && e.key == key) {
                e.used = true;
                return &e;
            }
        return nullptr;
    }

    std::string get_string(const std::string& s, const std::string& k, const std::string& dflt) {
        Entry* e = find(s, k);
        return e ? e->value : dflt;
    }

    double get_number(const std::string& s, const std::string& k, double dflt) {
        Entry* e = find(s, k);
        if (!e) return dflt;
        return parse_number(*e);
    }

    bool get_bool(const std::string& s, const std::string& k, bool dflt) {
        Entry* e = find(s, k);
        if (!e) return dflt;
        const std::string v = lower(e->value);
        if (v == "true" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "no" || v == "0") return false;
        fail(e->line, "expected a boolean for '" + k + "', got '" + e->value + "'");
    }

    double parse_number(const Entry& e) const {
        try {
            std::size_t pos = 0;
            const double v = std::stod(e.value, &pos);
            if (trim(e.value.substr(pos)).empty()) return v;
        } catch (const std::exception&) {
        }
        fail(e.line, "expected a number for '" + e.key + "', got '" + e.value + "'");
    }

    std::vector<double> parse_numbers(const Entry& e) const {
        std::vector<double> out;
        for (const std::string& part : split(e.value, ',')) {
            try {
                std::size_t pos = 0;
                out.push_back(std::stod(part, &pos));
                if (!trim(part.substr(pos)).empty()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                fail(e.line, "expected comma-separated numbers for '" + e.key + "'");
            }
        }
        return out;
    }

    Eigen::Vector3d parse_point(const Entry& e, int dim) const {
        const std::vector<double> v = parse_numbers(e);
        if (static_cast<int>(v.size()) != dim)
            fail(e.line, "'" + e.key + "' needs " + std::to_string(dim) + " coordinates");
        Eigen::Vector3d p = Eigen::Vector3d::Zero();
        for (int i = 0; i < dim; ++i) p[i] = v[i];
        return p;
    }

    VectorExpression parse_closure(const std::string& s, const std::string& k, int dim) {
        Entry* e = find(s, k);
        if (!e) return VectorExpression::zero(dim);
        try {
            return VectorExpression::parse(e->value, dim);
        } catch (const std::exception& ex) {
            fail(e->line, std::string(ex.what()));
        }
    }

    [[noreturn]] void fail(int line, const std::string& msg) const {
        if (line > 0)
            throw std::invalid_argument(name_ + ":" + std::to_string(line) + ": " + msg);
        throw std::invalid_argument(name_ + ": " + msg);
    }

    void check_all_used() const {
        for (const auto& e : entries_)
            if (!e.used) fail(e.line, "unknown key '" + e.key + "' in [" + e.section + "]");
    }

    std::vector<Entry> entries_;
    std::vector<std::string> seen_sections_;
    std::string name_;
};

ElasticTensor parse_tensor(ConfigReader& r, const std::string& key, int dim) {
    Entry* e = r.find("phases", key);
    if (!e) r.fail(0, "missing required key '" + key + "' in [phases]");
    const std::vector<std::string> w = split_ws(e->value);
    if (w.size() == 3 && lower(w[0]) == "isotropic") {
        try {
            return isotropic_tensor(std::stod(w[1]), std::stod(w[2]), dim);
        } catch (const std::exception& ex) {
            r.fail(e->line, ex.what());
        }
    }
    r.fail(e->line, "'" + key + "' must be 'isotropic LAMBDA MU'");
}

int side_index(const std::string& name, int dim) {
    static const std::map<std::string, int> sides = {{"left", 0},   {"right", 1}, {"bottom", 2},
                                                     {"top", 3},    {"back", 4},  {"front", 5}};
    auto it = sides.find(name);
    if (it == sides.end() || it->second >= 2 * dim) return -1;
    return it->second;
}

}  // namespace

RunSetup parse_config_text(const std::string& text, const std::string& name) {
    ConfigReader r(text, name);
    for (const char* required : {"domain", "phases"})
        if (!r.has_section(required))
            throw std::invalid_argument(name + ": missing required section [" +
                                        std::string(required) + "]");

    RunSetup setup;
    ProblemSpec& prob = setup.problem;

    // [domain]
    prob.dim = static_cast<int>(r.get_number("domain", "dim", 2));
    if (prob.dim != 2 && prob.dim != 3)
        throw std::invalid_argument(name + ": dim must be 2 or 3");
    if (Entry* e = r.find("domain", "lo")) prob.lo = r.parse_point(*e, prob.dim);
    if (Entry* e = r.find("domain", "hi"))
        prob.hi = r.parse_point(*e, prob.dim);
    else
        prob.hi = Eigen::Vector3d::Ones();

    // [phases]
    prob.C1 = parse_tensor(r, "c1", prob.dim);
    prob.C2 = parse_tensor(r, "c2", prob.dim);
    prob.f1 = r.parse_closure("phases", "f1", prob.dim);
    prob.f2 = r.parse_closure("phases", "f2", prob.dim);

    // [boundary]
    for (const auto& side : {"left", "right", "bottom", "top", "back", "front"}) {
        Entry* e = r.find("boundary", side);
        if (!e) continue;
        const int idx = side_index(side, prob.dim);
        if (idx < 0) r.fail(e->line, std::string("side '") + side + "' does not exist in dim " +
                                         std::to_string(prob.dim));
        const std::string v = lower(e->value);
        if (v == "dirichlet")
            prob.side_tags[idx] = BoundaryTag::Dirichlet;
        else if (v == "neumann")
            prob.side_tags[idx] = BoundaryTag::Neumann;
        else
            r.fail(e->line, "side tag must be 'dirichlet' or 'neumann'");
    }
    if (Entry* e = r.find("boundary", "measurement")) {
        for (const std::string& s : split(e->value, ',')) {
            const int idx = side_index(lower(s), prob.dim);
            if (idx < 0) r.fail(e->line, "unknown side '" + s + "' in measurement list");
            if (prob.side_tags[idx] == BoundaryTag::Dirichlet)
                r.fail(e->line, "side '" + s + "' is Dirichlet; the measurement region may not "
                                "touch the Dirichlet boundary");
            prob.side_tags[idx] = BoundaryTag::NeumannMeasured;
        }
    }
    prob.dirichlet_datum = r.parse_closure("boundary", "dirichlet_data", prob.dim);
    prob.neumann_datum = r.parse_closure("boundary", "neumann_data", prob.dim);
    prob.measurement_target = r.parse_closure("boundary", "measurement_data", prob.dim);
    prob.gradient_target = r.parse_closure("cost", "gradient_target", prob.dim);

    // [cost]
    prob.weights.gamma_f = r.get_number("cost", "gamma_f", 0.0);
    prob.weights.gamma_g = r.get_number("cost", "gamma_g", 0.0);
    prob.weights.gamma_m = r.get_number("cost", "gamma_m", 0.0);
    prob.allow_full_cost_2d = r.get_bool("cost", "allow_full_cost_2d", false);

    // [perturbation]
    PerturbationSpec& pert = setup.perturbation;
    if (r.has_section("perturbation")) {
        if (Entry* e = r.find("perturbation", "x0"))
            pert.x0 = r.parse_point(*e, prob.dim);
        else
            pert.x0 = 0.5 * (prob.lo + prob.hi);
        if (Entry* e = r.find("perturbation", "shape")) {
            const std::vector<std::string> w = split_ws(e->value);
            const std::string kind = lower(w[0]);
            if (kind == "ball") {
                pert.shape.kind = InclusionShape::Kind::Ball;
            } else if (kind == "ellipse") {
                pert.shape.kind = InclusionShape::Kind::Ellipse;
                if (static_cast<int>(w.size()) != 1 + prob.dim)
                    r.fail(e->line, "ellipse needs " + std::to_string(prob.dim) + " semi axes");
                for (int i = 0; i < prob.dim; ++i) pert.shape.semi_axes[i] = std::stod(w[1 + i]);
            } else if (kind == "polygon") {
                pert.shape.kind = InclusionShape::Kind::Polygon;
                if (w.size() < 7 || (w.size() - 1) % 2 != 0)
                    r.fail(e->line, "polygon needs at least 3 'x y' vertex pairs");
                for (std::size_t i = 1; i + 1 < w.size(); i += 2)
                    pert.shape.polygon.emplace_back(std::stod(w[i]), std::stod(w[i + 1]));
            } else {
                r.fail(e->line, "shape must be ball, ellipse, or polygon");
            }
        }
        if (Entry* e = r.find("perturbation", "eps")) {
            pert.epsilons = r.parse_numbers(*e);
        } else {
            const double eps_max = r.get_number("perturbation", "eps_max", 0.16);
            const double ratio = r.get_number("perturbation", "eps_ratio", 2.0);
            const int count = static_cast<int>(r.get_number("perturbation", "eps_count", 4));
            pert.epsilons = geometric_eps_grid(eps_max, ratio, count);
        }
    }

    // [numerics]
    NumericsOptions& num = setup.numerics;
    num.h = r.get_number("numerics", "h", num.h);
    num.order = static_cast<int>(r.get_number("numerics", "order", num.order));
    num.exterior_radius = r.get_number("numerics", "exterior_radius", num.exterior_radius);
    num.exterior_h = r.get_number("numerics", "exterior_h", num.exterior_h);
    num.exterior_grading = r.get_number("numerics", "exterior_grading", num.exterior_grading);
    if (Entry* e = r.find("numerics", "methods")) {
        num.methods.clear();
        for (const std::string& m : split(e->value, ',')) {
            const std::string ml = lower(m);
            if (ml != "amstutz" && ml != "averaged" && ml != "delfour")
                r.fail(e->line, "unknown method '" + m + "'");
            num.methods.push_back(ml);
        }
    }
    if (num.order != 1 && num.order != 2)
        throw std::invalid_argument(name + ": order must be 1 or 2");

    r.check_all_used();
    prob.validate();
    if (r.has_section("perturbation")) pert.validate(prob);
    return setup;
}

RunSetup parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

}  // namespace topoderiv
