#include "dnlslab/scenario.hpp"

#include <fstream>
#include <sstream>

namespace dnls {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, const std::string& key) {
    std::size_t pos = 0;
    double d;
    try {
        d = std::stod(v, &pos);
    } catch (...) {
        throw std::invalid_argument("scenario: bad numeric value for '" + key + "'");
    }
    if (pos != v.size())
        throw std::invalid_argument("scenario: trailing characters in value for '" + key + "'");
    return d;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("scenario: bad boolean for '" + key + "'");
}

// handles "(re,im)" coefficient syntax before the comma-split mangles it
std::string normalize_term_body(std::string body) {
    std::string out;
    bool in_paren = false;
    for (char c : body) {
        if (c == '(') { in_paren = true; out += c; continue; }
        if (c == ')') { in_paren = false; out += c; continue; }
        if (c == ',' && in_paren) { out += ';'; continue; }
        out += c;
    }
    return out;
}

cd parse_complex(const std::string& v, const std::string& key) {
    if (!v.empty() && v.front() == '(' && v.back() == ')') {
        const std::string inner = v.substr(1, v.size() - 2);
        const auto semi = inner.find(';');
        if (semi == std::string::npos)
            return cd(parse_double(trim(inner), key), 0.0);
        return cd(parse_double(trim(inner.substr(0, semi)), key),
                  parse_double(trim(inner.substr(semi + 1)), key));
    }
    return cd(parse_double(v, key), 0.0);
}

} // namespace

Scenario Scenario::parse(const std::string& text) {
    Scenario sc;
    std::istringstream is(text);
    std::string line;
    bool in_list = false;
    int lineno = 0;
    bool grid_default_2d = false;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (in_list) {
            if (line == "]") { in_list = false; continue; }
            if (line.front() == '{') {
                std::string body = line;
                if (body.back() == ',') body.pop_back();
                if (body.front() != '{' || body.back() != '}')
                    throw std::invalid_argument("scenario: malformed list entry at line " +
                                                std::to_string(lineno));
                body = normalize_term_body(body.substr(1, body.size() - 2));
                // re-split on commas with the complex comma protected
                NonlinTerm t;
                bool have_coeff = false;
                std::stringstream ss(body);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    item = trim(item);
                    if (item.empty()) continue;
                    const auto eq = item.find('=');
                    if (eq == std::string::npos)
                        throw std::invalid_argument("scenario: malformed entry '" + item + "'");
                    const std::string key = trim(item.substr(0, eq));
                    const std::string val = trim(item.substr(eq + 1));
                    if (key == "coeff") { t.coeff = parse_complex(val, key); have_coeff = true; }
                    else if (key == "conj_u") t.conj_u = parse_bool(val, key);
                    else if (key == "conj_grad") t.conj_grad = parse_bool(val, key);
                    else if (key == "axis") t.axis = static_cast<int>(parse_double(val, key));
                    else throw std::invalid_argument("scenario: unknown nonlinearity key '" +
                                                     key + "'");
                }
                if (!have_coeff)
                    throw std::invalid_argument("scenario: nonlinearity term without coeff");
                sc.nonlinearity.terms.push_back(t);
                continue;
            }
            throw std::invalid_argument("scenario: malformed list line " + std::to_string(lineno));
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("scenario: expected 'key = value' at line " +
                                        std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "nonlinearity") {
            if (val != "[") throw std::invalid_argument("scenario: nonlinearity must open '['");
            in_list = true;
        } else if (key == "dim") {
            sc.grid.dim = static_cast<int>(parse_double(val, key));
            if (sc.grid.dim == 2 && !grid_default_2d) {
                grid_default_2d = true;
                sc.grid.points = 64;
                sc.grid.length = 16.0;
                sc.grid.steps = 32;
            }
        } else if (key == "points") {
            sc.grid.points = static_cast<int>(parse_double(val, key));
        } else if (key == "L") {
            sc.grid.length = parse_double(val, key);
        } else if (key == "M") {
            sc.grid.steps = static_cast<int>(parse_double(val, key));
        } else if (key == "s") {
            sc.s = parse_double(val, key);
        } else if (key == "sigma") {
            sc.sigma = parse_double(val, key);
        } else if (key == "C_scale") {
            sc.C_scale = parse_double(val, key);
        } else if (key == "tol") {
            sc.tol = parse_double(val, key);
        } else if (key == "seed") {
            sc.seed = static_cast<std::uint64_t>(parse_double(val, key));
        } else if (key == "data") {
            sc.data = val;
        } else if (key == "data_kmax") {
            sc.data_kmax = parse_double(val, key);
        } else if (key == "data_amplitude") {
            sc.data_amplitude = parse_double(val, key);
        } else if (key == "gamma") {
            sc.gamma = parse_double(val, key);
        } else if (key == "bump_width") {
            sc.bump_width = parse_double(val, key);
        } else {
            throw std::invalid_argument("scenario: unknown key '" + key + "'");
        }
    }
    if (in_list) throw std::invalid_argument("scenario: unterminated nonlinearity list");
    sc.grid.validate();
    sc.nonlinearity.validate(sc.grid.dim);
    return sc;
}

Scenario Scenario::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("scenario: cannot open " + path.string());
    std::stringstream buf;
    buf << is.rdbuf();
    return parse(buf.str());
}

PipelineConfig Scenario::pipeline_config() const {
    PipelineConfig cfg;
    cfg.s = s;
    cfg.sigma = sigma;
    cfg.C_scale = C_scale;
    cfg.tol = tol;
    cfg.rescaled_steps = grid.steps;
    return cfg;
}

Field Scenario::make_datum() const {
    if (data == "zero") return Field(grid);
    if (data == "gaussian") {
        Field f = gaussian_bump(grid, {grid.length / 2.0, grid.length / 2.0}, 1.5);
        f *= cd(data_amplitude, 0);
        return f;
    }
    if (data.rfind("dnf1:", 0) == 0) {
        const SpacetimeField st = read_dnf1(data.substr(5));
        return st.frame(0);
    }
    if (data == "random") {
        Rng rng = make_rng(seed);
        Field f = random_band_limited(grid, rng, data_kmax);
        f *= cd(data_amplitude, 0);
        return f;
    }
    throw std::invalid_argument("scenario: unknown data kind '" + data + "'");
}

} // namespace dnls
